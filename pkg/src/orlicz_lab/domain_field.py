"""Masked grid domains, sampled fields and finitely supported measures.

A domain is an axis-aligned box split into equal cells; the mask marks the
cells whose centers belong to the open set.  Integrals use the midpoint rule
on masked cells and essential suprema are approximated by the grid maximum.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "GridDomain",
    "SampledField",
    "FieldExpr",
    "DiscreteMeasure",
    "build_grid",
    "named_mask",
    "measure",
    "sample",
    "gradient",
    "integrate",
    "ess_sup",
    "field_to_csv",
    "field_from_csv",
]


@dataclass(frozen=True, eq=False)
class GridDomain:
    box: tuple[tuple[float, float], ...]
    resolution: tuple[int, ...]
    mask: np.ndarray

    def __post_init__(self):
        if self.mask.shape != tuple(self.resolution):
            raise ValueError("mask shape does not match resolution")
        if not self.mask.any():
            raise ValueError("empty mask: no cell center lies in the domain")
        self.mask.setflags(write=False)

    @property
    def ndim(self) -> int:
        return len(self.resolution)

    @property
    def cell_widths(self) -> np.ndarray:
        return np.array([(hi - lo) / n for (lo, hi), n in zip(self.box, self.resolution)])

    @property
    def cell_measure(self) -> float:
        return float(np.prod(self.cell_widths))

    @property
    def n_cells(self) -> int:
        return int(self.mask.sum())

    @property
    def measure(self) -> float:
        return self.n_cells * self.cell_measure

    @property
    def indices(self) -> np.ndarray:
        """Integer grid indices of masked cells, shape (M, N), C order."""
        return np.argwhere(self.mask)

    @property
    def centers(self) -> np.ndarray:
        """Coordinates of masked cell centers, shape (M, N)."""
        lo = np.array([b[0] for b in self.box])
        return lo + (self.indices + 0.5) * self.cell_widths


def _all_centers(box, resolution) -> np.ndarray:
    axes = [lo + (np.arange(n) + 0.5) * (hi - lo) / n for (lo, hi), n in zip(box, resolution)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack(mesh, axis=-1)


def build_grid(box, resolution, mask_predicate: Callable[[np.ndarray], np.ndarray] | None = None) -> GridDomain:
    """Build a masked grid.

    Parameters
    ----------
    box : sequence of (min, max) pairs, one per axis
    resolution : int or sequence of int
        Cell counts per axis.
    mask_predicate : callable, optional
        Vectorized predicate taking points of shape ``(..., N)`` and returning
        a boolean array of shape ``(...)``.  ``None`` keeps every cell.
    """
    box = tuple((float(lo), float(hi)) for lo, hi in box)
    if np.isscalar(resolution):
        resolution = (int(resolution),) * len(box)
    resolution = tuple(int(n) for n in resolution)
    if len(resolution) != len(box):
        raise ValueError("resolution and box have different dimensions")
    if any(hi <= lo for lo, hi in box):
        raise ValueError("degenerate box")
    if any(n < 1 for n in resolution):
        raise ValueError("resolution must be at least 1 per axis")
    if mask_predicate is None:
        mask = np.ones(resolution, dtype=bool)
    else:
        mask = np.asarray(mask_predicate(_all_centers(box, resolution)), dtype=bool)
        mask = np.broadcast_to(mask, resolution).copy()
    return GridDomain(box, resolution, mask)


def named_mask(name: str, **params) -> Callable[[np.ndarray], np.ndarray] | None:
    """Built-in mask predicates: ``box``, ``ball`` and ``annulus``.

    ``ball`` takes ``radius`` and optional ``center``; ``annulus`` takes
    ``r_in``, ``r_out`` and optional ``center``.  Centers default to the origin.
    """
    center = np.asarray(params.get("center", 0.0), dtype=float)
    if name == "box":
        return None
    if name == "ball":
        radius = float(params["radius"])
        return lambda x: np.linalg.norm(x - center, axis=-1) < radius
    if name == "annulus":
        r_in, r_out = float(params["r_in"]), float(params["r_out"])
        if not 0 <= r_in < r_out:
            raise ValueError("annulus needs 0 <= r_in < r_out")

        def pred(x):
            r = np.linalg.norm(x - center, axis=-1)
            return (r > r_in) & (r < r_out)

        return pred
    raise ValueError(f"unknown mask {name!r}")


def measure(domain: GridDomain) -> float:
    return domain.measure


@dataclass(frozen=True, eq=False)
class SampledField:
    """Values at masked cell centers, shape ``(M, d)``; ``+inf`` allowed, NaN not."""

    domain: GridDomain
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[0] != self.domain.n_cells:
            raise ValueError(f"values of shape {v.shape} do not match {self.domain.n_cells} masked cells")
        if np.isnan(v).any():
            raise ValueError("NaN in sampled field")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def component_count(self) -> int:
        return self.values.shape[1]

    @property
    def is_scalar(self) -> bool:
        return self.component_count == 1

    def scalar(self) -> np.ndarray:
        if not self.is_scalar:
            raise ValueError("expected a scalar field")
        return self.values[:, 0]

    def magnitude(self) -> np.ndarray:
        """Euclidean magnitude per cell."""
        if self.is_scalar:
            return np.abs(self.values[:, 0])
        return np.linalg.norm(self.values, axis=1)

    def __mul__(self, c: float) -> "SampledField":
        return SampledField(self.domain, self.values * c)

    __rmul__ = __mul__

    def __truediv__(self, c: float) -> "SampledField":
        return SampledField(self.domain, self.values / c)

    def __add__(self, other: "SampledField") -> "SampledField":
        return SampledField(self.domain, self.values + other.values)


@dataclass(frozen=True)
class FieldExpr:
    """Analytic field ``x -> R^d`` with an optional analytic gradient.

    ``value`` maps points of shape ``(M, N)`` to ``(M,)`` or ``(M, d)``.
    ``gradient`` maps points to ``(M, N)`` (scalar fields) or ``(M, d, N)``.
    ``sobolev=False`` marks a field that is not weakly differentiable; energies
    of such a field are infinite.
    """

    value: Callable[[np.ndarray], np.ndarray]
    gradient: Callable[[np.ndarray], np.ndarray] | None = None
    name: str = "custom"
    sobolev: bool = True

    def __call__(self, x: np.ndarray) -> np.ndarray:
        v = np.asarray(self.value(x), dtype=float)
        if v.ndim == 0:
            v = np.full(x.shape[0], float(v))
        return v if v.ndim == 2 else v[:, None]

    def scaled(self, c: float) -> "FieldExpr":
        grad = None if self.gradient is None else (lambda x, g=self.gradient: c * np.asarray(g(x)))
        return FieldExpr(lambda x, v=self.value: c * np.asarray(v(x)), grad, f"{c}*{self.name}", self.sobolev)


def sample(expr: FieldExpr | Callable, domain: GridDomain) -> SampledField:
    if not isinstance(expr, FieldExpr):
        expr = FieldExpr(expr)
    values = expr(domain.centers)
    if np.isnan(values).any():
        raise ValueError(f"field {expr.name!r} is NaN at some cell center")
    return SampledField(domain, values)


def gradient(expr: FieldExpr, domain: GridDomain) -> SampledField:
    """Gradient at masked centers, ``N*d`` components ordered ``j*N + i`` for du_j/dx_i.

    The analytic gradient is used when present; otherwise central differences
    with step equal to half the cell width along each axis.
    """
    x = domain.centers
    m, n = x.shape
    if expr.gradient is not None:
        g = np.asarray(expr.gradient(x), dtype=float)
        g = np.broadcast_to(g, (m,) + g.shape[1:]) if g.ndim else np.full((m, n), float(g))
        if g.ndim == 2:
            g = g[:, None, :]
    else:
        cols = []
        for i, h in enumerate(domain.cell_widths / 2):
            step = np.zeros(n)
            step[i] = h
            with np.errstate(all="raise"):
                try:
                    cols.append((expr(x + step) - expr(x - step)) / (2 * h))
                except FloatingPointError as exc:
                    raise ValueError(f"field {expr.name!r} failed at a stencil point") from exc
        g = np.stack(cols, axis=-1)
    if np.isnan(g).any():
        raise ValueError(f"gradient of {expr.name!r} is NaN at some cell center")
    return SampledField(domain, g.reshape(m, -1))


def integrate(field: SampledField | np.ndarray, domain: GridDomain | None = None) -> float:
    """Midpoint rule on masked cells; ``+inf`` if any cell value is ``+inf``."""
    if isinstance(field, SampledField):
        domain = domain or field.domain
        values = field.scalar()
    else:
        values = np.asarray(field, dtype=float)
    if np.isposinf(values).any():
        return np.inf
    return float(values.sum() * domain.cell_measure)


def ess_sup(field: SampledField | np.ndarray, domain: GridDomain | None = None) -> float:
    values = field.scalar() if isinstance(field, SampledField) else np.asarray(field, dtype=float)
    return float(values.max())


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    atoms: np.ndarray
    weights: np.ndarray = field(default=None)

    def __post_init__(self):
        atoms = np.asarray(self.atoms, dtype=float)
        if atoms.ndim == 1:
            atoms = atoms[:, None]
        w = np.full(len(atoms), 1.0 / len(atoms)) if self.weights is None else np.asarray(self.weights, dtype=float)
        if w.shape != (len(atoms),):
            raise ValueError("one weight per atom required")
        if (w <= 0).any():
            raise ValueError("weights must be positive")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {w.sum()!r}, not 1")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", w)

    def barycenter(self) -> np.ndarray:
        return self.weights @ self.atoms


def field_to_csv(field: SampledField, path) -> None:
    """Write masked cells as rows ``i0,...,i{N-1},c0,...,c{d-1}``."""
    idx = field.domain.indices
    header = [f"i{k}" for k in range(idx.shape[1])] + [f"c{k}" for k in range(field.component_count)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for ij, vals in zip(idx, field.values):
            w.writerow([*map(int, ij), *("%.17g" % v for v in vals)])


def field_from_csv(path, domain: GridDomain) -> SampledField:
    """Read a field written by :func:`field_to_csv`; every masked cell must be present."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    n = sum(h.startswith("i") for h in header)
    if n != domain.ndim:
        raise ValueError("index columns do not match domain dimension")
    lookup = {tuple(int(v) for v in r[:n]): [float(v) for v in r[n:]] for r in body}
    try:
        values = [lookup[tuple(int(v) for v in ij)] for ij in domain.indices]
    except KeyError as exc:
        raise ValueError(f"masked cell {exc.args[0]} missing from {path}") from None
    return SampledField(domain, np.array(values))


def linear_field(axis: int = 0, slope: float = 1.0) -> FieldExpr:
    def grad(x):
        g = np.zeros_like(x)
        g[:, axis] = slope
        return g

    return FieldExpr(lambda x: slope * x[:, axis], grad, f"linear{axis}")


def constant_field(c: float) -> FieldExpr:
    return FieldExpr(lambda x: np.full(x.shape[0], float(c)), lambda x: np.zeros_like(x), f"const{c}")


def power_field(k: float, axis: int = 0) -> FieldExpr:
    def grad(x):
        g = np.zeros_like(x)
        g[:, axis] = k * x[:, axis] ** (k - 1)
        return g

    return FieldExpr(lambda x: x[:, axis] ** k, grad, f"x{axis}^{k}")


def oscillating_field(n: int, axis: int = 0) -> FieldExpr:
    """``x_axis + sin(n pi x_axis)/n``: converges weakly to ``x_axis`` as n grows."""

    def grad(x):
        g = np.zeros_like(x)
        g[:, axis] = 1.0 + np.pi * np.cos(n * np.pi * x[:, axis])
        return g

    return FieldExpr(lambda x: x[:, axis] + np.sin(n * np.pi * x[:, axis]) / n, grad, f"oscillating{n}")


def random_piecewise_constant(domain: GridDomain, rng: np.random.Generator, pieces: int = 8,
                              scale: float = 1.0) -> SampledField:
    """Random field constant on ``pieces`` contiguous blocks of masked cells."""
    m = domain.n_cells
    cuts = np.sort(rng.choice(np.arange(1, m), size=min(pieces - 1, m - 1), replace=False)) if m > 1 else []
    levels = rng.uniform(-scale, scale, size=len(cuts) + 1)
    return SampledField(domain, np.repeat(levels, np.diff(np.r_[0, cuts, m])))


__all__ += ["linear_field", "constant_field", "power_field", "oscillating_field", "random_piecewise_constant"]
