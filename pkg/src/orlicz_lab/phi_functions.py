"""Generalized weak Phi-functions and their growth constants.

A Phi-function is evaluated as ``phi(x, t)`` with ``x`` of shape ``(..., N)``
and ``t`` broadcastable to ``x.shape[:-1]``.  Values live in ``[0, +inf]``;
``+inf`` is an ordinary value.  Power-type families also carry a
``log_evaluate`` hook so that very large exponents do not overflow.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .domain_field import GridDomain

__all__ = [
    "FAMILIES",
    "PhiFunction",
    "GrowthReport",
    "AxiomReport",
    "make_family",
    "anchor_bounds",
    "check_a0",
    "estimate_ainc_constant",
    "check_weak_phi_axioms",
    "normalize",
    "lower_bound_check",
    "default_t_grid",
    "default_lambda_grid",
]

FAMILIES = (
    "power",
    "scaled_power",
    "variable_exponent",
    "double_phase",
    "infinity",
    "scaled_infinity",
    "linear_plus_infinity",
    "scaled_base",
    "normalized",
    "custom",
)


def default_t_grid() -> np.ndarray:
    return np.logspace(-4, 4, 64)


def default_lambda_grid() -> np.ndarray:
    return np.linspace(1e-3, 1.0, 64)


@dataclass(frozen=True)
class PhiFunction:
    evaluate: Callable[[np.ndarray, np.ndarray], np.ndarray]
    family_tag: str = "custom"
    declared_p: float | None = None
    declared_L: float | None = None
    params: dict = field(default_factory=dict)
    log_evaluate: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        if self.family_tag not in FAMILIES:
            raise ValueError(f"unknown family tag {self.family_tag!r}")

    def __call__(self, x, t) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        t = np.asarray(t, dtype=float)
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            v = np.asarray(self.evaluate(x, t), dtype=float)
        v = np.broadcast_to(v, np.broadcast_shapes(x.shape[:-1], t.shape))
        # t = 0 is 0 by definition, including 0 * inf coefficient products
        return np.where(t == 0, 0.0, v)

    def log(self, x, t) -> np.ndarray:
        """``log phi(x, t)`` with ``-inf`` for zero values."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        t = np.asarray(t, dtype=float)
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            if self.log_evaluate is not None:
                v = np.asarray(self.log_evaluate(x, t), dtype=float)
                v = np.broadcast_to(v, np.broadcast_shapes(x.shape[:-1], t.shape))
                return np.where(t == 0, -np.inf, v)
            return np.log(self(x, t))

    @property
    def name(self) -> str:
        if not self.params:
            return self.family_tag
        return self.family_tag + ":" + ",".join(f"{k}={v}" for k, v in self.params.items())


def _coeff(fields: dict, key: str, default=None):
    """Spatial coefficient as a callable on points of shape (..., N)."""
    c = fields.get(key, default)
    if c is None:
        raise ValueError(f"missing coefficient field {key!r}")
    if callable(c):
        return c
    value = float(c)
    return lambda x: np.full(x.shape[:-1], value)


def make_family(tag: str, params: dict | None = None, coeff_fields: dict | None = None,
                domain: GridDomain | None = None) -> PhiFunction:
    """Construct a Phi-function from a named family.

    Parameters by family::

        power                p
        scaled_power         p, scale (default 1/p)
        variable_exponent    coeff_fields["p"]; optional params p_min
        double_phase         p, q; coeff_fields["a"] (or params a)
        infinity             -
        scaled_infinity      a          (infinite for t > 1/a)
        linear_plus_infinity -          (max(0, 2t - 1), infinite for t > 1)
        scaled_base          a, n       ((a t)^n)

    When ``domain`` is given, coefficient fields are validated at its cell
    centers (a >= 0, p(x) >= 1).
    """
    params = dict(params or {})
    coeff_fields = dict(coeff_fields or {})

    if tag == "power":
        p = float(params["p"])
        _check_p(p)
        return PhiFunction(lambda x, t: t**p, tag, p, 1.0, {"p": p}, lambda x, t: p * np.log(t))

    if tag == "scaled_power":
        p = float(params["p"])
        _check_p(p)
        s = float(params.get("scale", 1.0 / p))
        if s <= 0:
            raise ValueError("scale must be positive")
        return PhiFunction(lambda x, t: s * t**p, tag, p, 1.0, {"p": p, "scale": s},
                           lambda x, t: np.log(s) + p * np.log(t))

    if tag == "variable_exponent":
        if "p" not in coeff_fields and "p" in params:
            coeff_fields["p"] = params.pop("p")
        pfun = _coeff(coeff_fields, "p")
        p_min = params.get("p_min")
        if domain is not None:
            pv = pfun(domain.centers)
            if (pv < 1).any():
                raise ValueError("exponent field must be >= 1 on the grid")
            p_min = float(pv.min()) if p_min is None else p_min
        if p_min is not None:
            _check_p(float(p_min))
        return PhiFunction(lambda x, t: t ** pfun(x), tag, None if p_min is None else float(p_min),
                           None if p_min is None else 1.0, {k: v for k, v in params.items()},
                           lambda x, t: pfun(x) * np.log(t))

    if tag == "double_phase":
        p, q = float(params["p"]), float(params["q"])
        _check_p(p)
        if q < p:
            raise ValueError("double phase needs q >= p")
        if "a" not in coeff_fields and "a" in params:
            coeff_fields["a"] = params.pop("a")
        afun = _coeff(coeff_fields, "a")
        if domain is not None and (afun(domain.centers) < 0).any():
            raise ValueError("coefficient a(x) must be nonnegative on the grid")

        def log_dp(x, t):
            lt = np.log(t)
            return np.logaddexp(p * lt, np.log(afun(x)) + q * lt)

        return PhiFunction(lambda x, t: t**p + afun(x) * t**q, tag, p, 1.0, {"p": p, "q": q}, log_dp)

    if tag == "infinity":
        return PhiFunction(lambda x, t: np.where(t > 1, np.inf, 0.0), tag, None, 1.0)

    if tag == "scaled_infinity":
        a = float(params["a"])
        if a <= 0:
            raise ValueError("a must be positive")
        return PhiFunction(lambda x, t: np.where(a * t > 1, np.inf, 0.0), tag, None, 1.0, {"a": a})

    if tag == "linear_plus_infinity":
        return PhiFunction(lambda x, t: np.where(t > 1, np.inf, np.maximum(0.0, 2 * t - 1)), tag, 1.0, 1.0)

    if tag == "scaled_base":
        a, n = float(params["a"]), float(params["n"])
        _check_p(n)
        if a <= 0:
            raise ValueError("a must be positive")
        return PhiFunction(lambda x, t: (a * t) ** n, tag, n, 1.0, {"a": a, "n": n},
                           lambda x, t: n * np.log(a * t))

    if tag == "custom":
        fn = params.get("evaluate") or coeff_fields.get("evaluate")
        if fn is None:
            raise ValueError("custom family needs an 'evaluate' callable")
        return PhiFunction(fn, tag, params.get("p"), params.get("L"))

    raise ValueError(f"unknown family tag {tag!r}")


def _check_p(p: float) -> None:
    if not p >= 1:
        raise ValueError(f"exponent {p} must be >= 1")


def anchor_bounds(phi: PhiFunction, domain: GridDomain) -> tuple[float, float]:
    """``(min, max)`` of ``phi(x, 1)`` over masked cell centers."""
    v = phi(domain.centers, 1.0)
    return float(v.min()), float(v.max())


def check_a0(phi: PhiFunction, beta: float, domain: GridDomain) -> bool:
    if not 0 < beta <= 1:
        raise ValueError("beta must lie in (0, 1]")
    x = domain.centers
    return bool((phi(x, beta) <= 1).all() and (phi(x, 1 / beta) >= 1).all())


@dataclass
class GrowthReport:
    p: float
    estimated_L: float
    sample_counts: tuple[int, int, int]
    violations: list = field(default_factory=list)

    @property
    def holds(self) -> bool:
        return not self.violations


def _subsample(points: np.ndarray, k: int | None) -> np.ndarray:
    if k is None or len(points) <= k:
        return points
    return points[np.linspace(0, len(points) - 1, k).round().astype(int)]


def estimate_ainc_constant(phi: PhiFunction, p: float, domain: GridDomain, t_grid=None, lambda_grid=None,
                           L: float | None = None, max_x_samples: int | None = 256,
                           rtol: float = 1e-9) -> GrowthReport:
    """Sampled supremum of ``phi(x, lam t) / (lam^p phi(x, t))``.

    Samples with ``phi(x, t)`` equal to 0 or ``+inf`` are skipped; an infinite
    numerator over a finite denominator makes the estimate ``+inf``.  If ``L``
    is given, every sample whose ratio exceeds ``L (1 + rtol)`` is recorded as
    an ``(x, t, lam)`` violation.  The ratio is formed in log space.
    """
    t = default_t_grid() if t_grid is None else np.asarray(t_grid, dtype=float)
    lam = default_lambda_grid() if lambda_grid is None else np.asarray(lambda_grid, dtype=float)
    if t.size == 0 or lam.size == 0:
        raise ValueError("empty sample grid")
    if (t <= 0).any():
        raise ValueError("t grid must be positive")
    if (lam <= 0).any() or (lam > 1).any():
        raise ValueError("lambda grid must lie in (0, 1]")
    x = _subsample(domain.centers, max_x_samples)

    xs = x[:, None, None, :]
    den = phi.log(xs[..., 0, :], t[None, :])[:, :, None]
    num = phi.log(xs, lam[None, None, :] * t[None, :, None])
    admissible = np.isfinite(den) & np.broadcast_to(True, num.shape)
    if not admissible.any():
        raise ValueError("no admissible (x, t, lambda) sample")
    with np.errstate(invalid="ignore"):
        log_ratio = np.where(admissible, num - p * np.log(lam)[None, None, :] - den, -np.inf)
    est = float(np.exp(log_ratio.max()))
    violations = []
    if L is not None:
        bad = np.argwhere(log_ratio > np.log(L) + np.log1p(rtol))
        violations = [(tuple(x[i]), float(t[j]), float(lam[k])) for i, j, k in bad]
    return GrowthReport(float(p), est, (len(x), len(t), len(lam)), violations)


@dataclass
class AxiomReport:
    results: dict

    @property
    def passed(self) -> bool:
        return all(self.results.values())


def check_weak_phi_axioms(phi: PhiFunction, domain: GridDomain, t_grid=None, small_tol: float = 1e-3,
                          divergence_threshold: float = 1e3) -> AxiomReport:
    """Sampled check of the weak Phi-function axioms.

    Monotonicity is read as nondecreasing.  The small-t limit is accepted when
    ``phi(x, t_min) <= small_tol`` and divergence when
    ``phi(x, t_max) >= divergence_threshold``.
    """
    t = default_t_grid() if t_grid is None else np.asarray(t_grid, dtype=float)
    x = domain.centers
    v = phi(x[:, None, :], t[None, :])
    try:
        ainc1 = np.isfinite(estimate_ainc_constant(phi, 1.0, domain, t).estimated_L)
    except ValueError:
        # every phi(x, t) is 0 or inf: the inequality holds vacuously
        ainc1 = True
    results = {
        "zero_at_zero": bool((phi(x, 0.0) == 0).all()),
        "vanishes_at_zero": bool((v[:, 0] <= small_tol).all()),
        "diverges_at_infinity": bool((v[:, -1] >= divergence_threshold).all()),
        "nondecreasing": bool((v[:, 1:] >= v[:, :-1]).all()),
        "ainc_1": bool(ainc1),
    }
    return AxiomReport(results)


def normalize(phi: PhiFunction, domain: GridDomain) -> PhiFunction:
    """Divide by ``phi(x, 1)`` so the result equals 1 at ``t = 1``."""
    anchor = phi(domain.centers, 1.0)
    if not ((anchor > 0) & np.isfinite(anchor)).all():
        raise ValueError("phi(x, 1) must be positive and finite at every cell center")

    def evaluate(x, t):
        return phi(x, t) / phi(x, 1.0)

    def log_evaluate(x, t):
        return phi.log(x, t) - phi.log(x, 1.0)

    return PhiFunction(evaluate, "normalized", phi.declared_p, phi.declared_L, {"base": phi.name}, log_evaluate)


def lower_bound_check(phi: PhiFunction, p: float, L: float, c: float, domain: GridDomain, t_grid=None) -> bool:
    """True iff ``phi(x, t) >= t^p / (L c) - 1/c`` at every sampled ``(x, t)``."""
    t = default_t_grid() if t_grid is None else np.asarray(t_grid, dtype=float)
    x = domain.centers
    v = phi(x[:, None, :], t[None, :])
    with np.errstate(over="ignore"):
        bound = t**p / (L * c) - 1 / c
    return bool((v >= bound[None, :]).all())
