"""Integral and supremal energies of integrands ``f(x, u, Du)``.

Also houses sampled checks of level convexity and coercivity, the discrete
level-convex Jensen inequality and the L^p-to-supremum probe over per-cell
discrete measures.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .domain_field import DiscreteMeasure, FieldExpr, GridDomain, SampledField, ess_sup, gradient, sample
from .modular_norm import luxemburg_norm, modular
from .phi_functions import PhiFunction

__all__ = [
    "Integrand",
    "EnergyValue",
    "make_integrand",
    "composite",
    "F_energy",
    "E_energy",
    "F_inf_energy",
    "E_inf_energy",
    "LevelConvexReport",
    "check_level_convex",
    "CoercivityReport",
    "check_coercivity",
    "JensenReport",
    "discrete_jensen_check",
    "YoungProbe",
    "young_limit_probe",
    "random_level_convex",
]

KINDS = ("norm_energy", "modular_energy", "sup_energy", "indicator_energy")


@dataclass(frozen=True)
class Integrand:
    """``f(x, u, xi)`` evaluated row-wise on arrays of shapes (M, N), (M, d), (M, N*d)."""

    evaluate: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]
    alpha: float = 1.0
    gamma: float = 1.0
    level_convex_declared: bool = False
    name: str = "custom"

    def __call__(self, x, u, xi) -> np.ndarray:
        xi = np.atleast_2d(np.asarray(xi, dtype=float))
        m = xi.shape[0]
        x, u = (np.atleast_2d(np.asarray(a, dtype=float)) for a in (x, u))
        x = np.broadcast_to(x, (m, x.shape[1]))
        u = np.broadcast_to(u, (m, u.shape[1]))
        return np.broadcast_to(np.asarray(self.evaluate(x, u, xi), dtype=float), (m,))


def _xi_norm(xi):
    return np.linalg.norm(xi, axis=-1)


def make_integrand(name: str, **params) -> Integrand:
    """Built-in integrands.

    ``abs_xi``          |xi|
    ``abs_xi_pow``      |xi|^power (+ shift)
    ``sqrt_abs_xi``     sqrt(|xi|)
    ``constant``        value
    ``affine_max``      max(0, max_k <A_k, xi> + b_k), params ``A`` (k, N*d) and ``b`` (k,)
    """
    if name == "abs_xi":
        return Integrand(lambda x, u, xi: _xi_norm(xi), 1.0, 1.0, True, name)
    if name == "abs_xi_pow":
        power = float(params.get("power", 2.0))
        shift = float(params.get("shift", 0.0))
        if shift < 0:
            raise ValueError("shift must be nonnegative")
        return Integrand(lambda x, u, xi: _xi_norm(xi) ** power + shift, 1.0, power, True, name)
    if name == "sqrt_abs_xi":
        return Integrand(lambda x, u, xi: np.sqrt(_xi_norm(xi)), 1.0, 0.5, True, name)
    if name == "constant":
        value = float(params.get("value", 1.0))
        if value < 0:
            raise ValueError("integrand values must be nonnegative")
        # coercivity alpha |xi|^gamma cannot hold for a constant; declared values are nominal
        return Integrand(lambda x, u, xi: np.full(xi.shape[0], value), 0.0, 1.0, True, name)
    if name == "affine_max":
        A = np.atleast_2d(np.asarray(params["A"], dtype=float))
        b = np.asarray(params.get("b", np.zeros(len(A))), dtype=float)
        return Integrand(lambda x, u, xi: np.maximum(0.0, (xi @ A.T + b).max(axis=1)), 0.0, 1.0, True, name)
    raise ValueError(f"unknown integrand {name!r}")


@dataclass(frozen=True)
class EnergyValue:
    value: float
    kind: str

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown energy kind {self.kind!r}")

    def __float__(self) -> float:
        return self.value


def composite(f: Integrand, u_expr: FieldExpr, domain: GridDomain) -> SampledField:
    """Sampled ``x -> f(x, u(x), Du(x))``."""
    u = sample(u_expr, domain)
    du = gradient(u_expr, domain)
    return SampledField(domain, f(domain.centers, u.values, du.values))


def F_energy(phi: PhiFunction, f: Integrand, u_expr: FieldExpr, domain: GridDomain,
             rel_tol: float = 1e-8) -> EnergyValue:
    if not u_expr.sobolev:
        return EnergyValue(np.inf, "norm_energy")
    return EnergyValue(luxemburg_norm(phi, composite(f, u_expr, domain), domain, rel_tol).value, "norm_energy")


def E_energy(phi: PhiFunction, f: Integrand, u_expr: FieldExpr, domain: GridDomain) -> EnergyValue:
    if not u_expr.sobolev:
        return EnergyValue(np.inf, "modular_energy")
    return EnergyValue(modular(phi, composite(f, u_expr, domain), domain), "modular_energy")


def F_inf_energy(f: Integrand, u_expr: FieldExpr, domain: GridDomain) -> EnergyValue:
    if not u_expr.sobolev:
        return EnergyValue(np.inf, "sup_energy")
    return EnergyValue(ess_sup(composite(f, u_expr, domain)), "sup_energy")


def E_inf_energy(f: Integrand, u_expr: FieldExpr, domain: GridDomain) -> EnergyValue:
    sup = F_inf_energy(f, u_expr, domain).value
    return EnergyValue(0.0 if sup <= 1 else np.inf, "indicator_energy")


def _as_xi_function(f, x=None, u=None) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(f, Integrand):
        return lambda xi: f(x if x is not None else np.zeros((1, 1)), u if u is not None else np.zeros((1, 1)), xi)
    return lambda xi: np.asarray(f(np.atleast_2d(xi)), dtype=float)


@dataclass
class LevelConvexReport:
    violations: list = field(default_factory=list)
    checked: int = 0

    @property
    def passed(self) -> bool:
        """No violation found on the sample; evidence, not proof."""
        return not self.violations


def check_level_convex(f, xi_pairs, theta_grid: int | Sequence[float] = 33, x_samples=None, u_samples=None,
                       rtol: float = 1e-12) -> LevelConvexReport:
    """Search for ``f(theta a + (1-theta) b) > max{f(a), f(b)}`` along sampled segments.

    ``f`` is an :class:`Integrand` (checked in ``xi`` for every combination of
    ``x_samples`` and ``u_samples``) or a vectorized function of ``xi`` rows.
    ``xi_pairs`` is a sequence of ``(a, b)`` points.
    """
    theta = np.linspace(0, 1, theta_grid) if np.isscalar(theta_grid) else np.asarray(theta_grid, dtype=float)
    pairs = [(np.atleast_1d(np.asarray(a, dtype=float)), np.atleast_1d(np.asarray(b, dtype=float)))
             for a, b in xi_pairs]
    if not pairs or theta.size == 0:
        raise ValueError("empty sample")
    if isinstance(f, Integrand):
        xs = [None] if x_samples is None else [np.atleast_2d(v) for v in x_samples]
        us = [None] if u_samples is None else [np.atleast_2d(v) for v in u_samples]
        contexts = [(x, u) for x in xs for u in us]
    else:
        contexts = [(None, None)]
    report = LevelConvexReport()
    for x, u in contexts:
        g = _as_xi_function(f, x, u)
        for a, b in pairs:
            seg = theta[:, None] * a + (1 - theta[:, None]) * b
            vals = g(seg)
            top = max(g(a[None])[0], g(b[None])[0])
            report.checked += len(theta)
            for th, v in zip(theta, vals):
                if v > top + rtol * max(1.0, abs(top)):
                    report.violations.append((x, u, tuple(a), tuple(b), float(th)))
    return report


@dataclass
class CoercivityReport:
    violations: list = field(default_factory=list)
    checked: int = 0

    @property
    def passed(self) -> bool:
        return not self.violations


def check_coercivity(f: Integrand, alpha: float, gamma: float, samples) -> CoercivityReport:
    """Check ``f(x, u, xi) >= alpha |xi|^gamma`` on ``samples = (x, u, xi)`` row arrays."""
    x, u, xi = (np.atleast_2d(np.asarray(s, dtype=float)) for s in samples)
    vals = f(x, u, xi)
    lower = alpha * _xi_norm(xi) ** gamma
    bad = np.flatnonzero(vals < lower * (1 - 1e-12))
    return CoercivityReport([(float(_xi_norm(xi)[i]), float(vals[i]), float(lower[i])) for i in bad], len(vals))


@dataclass
class JensenReport:
    value_at_barycenter: float
    max_over_atoms: float

    @property
    def margin(self) -> float:
        return self.max_over_atoms - self.value_at_barycenter

    @property
    def passed(self) -> bool:
        return self.value_at_barycenter <= self.max_over_atoms + 1e-12 * max(1.0, abs(self.max_over_atoms))


def discrete_jensen_check(f, mu: DiscreteMeasure) -> JensenReport:
    """Compare ``f`` at the barycenter of ``mu`` with the maximum of ``f`` over its atoms."""
    g = _as_xi_function(f)
    return JensenReport(float(g(mu.barycenter()[None])[0]), float(g(mu.atoms).max()))


@dataclass
class YoungProbe:
    p_list: list
    values: list
    double_max: float

    def rows(self):
        return list(zip(self.p_list, self.values))


def _stack_measures(measures, m: int) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(measures, tuple) and len(measures) == 2:
        atoms, weights = (np.asarray(a, dtype=float) for a in measures)
        return atoms, weights
    if len(measures) != m:
        raise ValueError("one discrete measure per masked cell required")
    k = max(len(mu.weights) for mu in measures)
    dim = measures[0].atoms.shape[1]
    atoms = np.zeros((m, k, dim))
    weights = np.zeros((m, k))
    for i, mu in enumerate(measures):
        atoms[i, : len(mu.weights)] = mu.atoms
        weights[i, : len(mu.weights)] = mu.weights
    return atoms, weights


def young_limit_probe(f: Integrand, u_expr: FieldExpr, measures, domain: GridDomain, p_list) -> YoungProbe:
    """``(int sum_i w_i(x) f(x, u(x), xi_i(x))^p dx)^(1/p)`` for each ``p``.

    ``measures`` is a list of per-cell :class:`DiscreteMeasure` (atoms in
    ``R^(N d)``) or a pair of arrays ``(atoms (M, k, N d), weights (M, k))``;
    zero weights pad cells with fewer atoms.
    """
    x = domain.centers
    m = len(x)
    atoms, weights = _stack_measures(measures, m)
    k = atoms.shape[1]
    u = sample(u_expr, domain).values
    vals = f(np.repeat(x, k, axis=0), np.repeat(u, k, axis=0), atoms.reshape(m * k, -1)).reshape(m, k)
    top = float(vals[weights > 0].max())
    out = []
    for p in p_list:
        if top == 0:
            out.append(0.0)
            continue
        inner = (weights * (vals / top) ** p).sum(axis=1)
        out.append(top * (inner.sum() * domain.cell_measure) ** (1.0 / p))
    return YoungProbe(list(p_list), out, top)


def random_level_convex(rng: np.random.Generator, dim: int, k: int | None = None) -> Callable[[np.ndarray], np.ndarray]:
    """Random level-convex function: an increasing map of a max of random affine maps."""
    k = int(rng.integers(1, 9)) if k is None else k
    A = rng.normal(size=(k, dim))
    b = rng.normal(size=k)
    choice = int(rng.integers(0, 4))
    scale = rng.uniform(0.5, 2.0)
    outer = [
        lambda s: s,
        lambda s: np.exp(scale * s),
        lambda s: np.arctan(scale * s),
        lambda s: np.cbrt(s) + scale * s,
    ][choice]
    return lambda xi: outer((np.atleast_2d(xi) @ A.T + b).max(axis=1))
