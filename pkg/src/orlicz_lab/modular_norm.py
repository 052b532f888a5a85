"""Modulars, Luxemburg quasinorms and the embedding into Lebesgue spaces."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import logsumexp

from .domain_field import FieldExpr, GridDomain, SampledField, gradient, integrate, sample
from .phi_functions import PhiFunction, anchor_bounds, estimate_ainc_constant

__all__ = [
    "HypothesisError",
    "NormResult",
    "modular",
    "luxemburg_norm",
    "lp_norm",
    "sobolev_modular",
    "sobolev_norm",
    "UnitBallReport",
    "unit_ball_check",
    "embedding_constant",
    "EmbeddingReport",
    "embedding_check",
    "ModularBoundReport",
    "norm_from_modular_bound",
    "norm_results_to_csv",
]

BRACKET_FACTOR = 4.0
MAX_EXPANSIONS = 60
MAX_ITER = 200


class HypothesisError(ValueError):
    """A declared hypothesis of an inequality does not hold on the sample."""


@dataclass(frozen=True)
class NormResult:
    value: float
    iterations: int
    bracket: tuple[float, float]
    tolerance_met: bool

    def __float__(self) -> float:
        return self.value


def _magnitudes(field: SampledField | np.ndarray) -> np.ndarray:
    if isinstance(field, SampledField):
        return field.magnitude()
    return np.abs(np.asarray(field, dtype=float))


def modular(phi: PhiFunction, field: SampledField, domain: GridDomain | None = None) -> float:
    """Integral of ``phi(x, |f(x)|)``; vector fields enter through their magnitude."""
    domain = domain or field.domain
    return integrate(phi(domain.centers, _magnitudes(field)), domain)


def _log_modular(phi: PhiFunction, mags: np.ndarray, domain: GridDomain) -> float:
    logs = phi.log(domain.centers, mags)
    if np.isposinf(logs).any():
        return np.inf
    logs = logs[np.isfinite(logs)]
    if logs.size == 0:
        return -np.inf
    return float(logsumexp(logs) + np.log(domain.cell_measure))


def _bisect(feasible: Callable[[float], bool], scale: float, rel_tol: float) -> NormResult:
    """Smallest ``lam`` with ``feasible(lam)``, assuming feasibility is monotone in ``lam``."""
    if scale == 0:
        return NormResult(0.0, 0, (0.0, 0.0), True)
    if not np.isfinite(scale):
        return NormResult(np.inf, 0, (np.inf, np.inf), True)
    lo, hi = scale / BRACKET_FACTOR, scale * BRACKET_FACTOR
    it = 0
    for _ in range(MAX_EXPANSIONS):
        if feasible(hi):
            break
        lo, hi = hi, 2 * hi
        it += 1
    else:
        if not feasible(hi):
            return NormResult(np.inf, it, (lo, hi), False)
    for _ in range(MAX_EXPANSIONS):
        if not feasible(lo):
            break
        lo, hi = lo / 2, lo
        it += 1
    else:
        if feasible(lo):
            return NormResult(0.0, it, (0.0, lo), False)
    n = 0
    while hi - lo > rel_tol * lo and n < MAX_ITER:
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            hi = mid
        else:
            lo = mid
        n += 1
    return NormResult(0.5 * (lo + hi), it + n, (lo, hi), hi - lo <= rel_tol * lo)


def luxemburg_norm(phi: PhiFunction, field: SampledField, domain: GridDomain | None = None,
                   rel_tol: float = 1e-8) -> NormResult:
    """``inf{lam > 0 : rho(f / lam) <= 1}`` by bracketing and bisection.

    The bracket starts at ``[s/4, 4 s]`` with ``s`` the grid maximum of ``|f|``
    and is widened by doubling up to 60 times.  The reported value is the
    midpoint of the final bracket, whose lower end is infeasible and upper end
    feasible.
    """
    if not 0 < rel_tol <= 1e-2:
        raise ValueError("rel_tol must lie in (0, 1e-2]")
    domain = domain or field.domain
    mags = _magnitudes(field)
    if phi.log_evaluate is not None:
        def feasible(lam):
            return _log_modular(phi, mags / lam, domain) <= 0.0
    else:
        def feasible(lam):
            return integrate(phi(domain.centers, mags / lam), domain) <= 1.0
    return _bisect(feasible, float(mags.max()), rel_tol)


def lp_norm(field: SampledField | np.ndarray, p: float, domain: GridDomain | None = None) -> float:
    """``(int |f|^p)^(1/p)``, or the grid maximum for ``p = inf``."""
    domain = domain or field.domain
    mags = _magnitudes(field)
    s = float(mags.max())
    if p == np.inf:
        return s
    if p < 1:
        raise ValueError("p must be >= 1")
    if s == 0 or not np.isfinite(s):
        return s
    # scaled by the maximum so that large p does not overflow
    return s * integrate((mags / s) ** p, domain) ** (1.0 / p)


def _sobolev_parts(u_expr: FieldExpr, domain: GridDomain) -> list[np.ndarray]:
    u = sample(u_expr, domain)
    g = gradient(u_expr, domain).values
    n, d = domain.ndim, u.component_count
    g = g.reshape(len(g), d, n)
    return [u.magnitude()] + [np.linalg.norm(g[:, :, i], axis=1) for i in range(n)]


def sobolev_modular(phi: PhiFunction, u_expr: FieldExpr, domain: GridDomain) -> float:
    """Modular of ``u`` plus the modulars of each partial derivative."""
    return sum(modular(phi, part, domain) for part in _sobolev_parts(u_expr, domain))


def sobolev_norm(phi: PhiFunction, u_expr: FieldExpr, domain: GridDomain, rel_tol: float = 1e-8) -> NormResult:
    parts = _sobolev_parts(u_expr, domain)
    x = domain.centers

    def feasible(lam):
        return sum(integrate(phi(x, part / lam), domain) for part in parts) <= 1.0

    return _bisect(feasible, max(float(p.max()) for p in parts), rel_tol)


@dataclass
class UnitBallReport:
    norm: float
    modular: float
    strict_implies_modular: bool
    modular_implies_norm: bool

    @property
    def passed(self) -> bool:
        return self.strict_implies_modular and self.modular_implies_norm


def unit_ball_check(phi: PhiFunction, field: SampledField, domain: GridDomain | None = None,
                    rel_tol: float = 1e-6) -> UnitBallReport:
    """Check ``||f|| < 1 => rho(f) <= 1 => ||f|| <= 1`` up to ``rel_tol``."""
    domain = domain or field.domain
    norm = luxemburg_norm(phi, field, domain, min(rel_tol, 1e-8)).value
    rho = modular(phi, field, domain)
    first = not (norm < 1 - rel_tol) or rho <= 1 + rel_tol
    second = not (rho <= 1) or norm <= 1 + rel_tol
    return UnitBallReport(norm, rho, first, second)


def embedding_constant(L: float, c: float, omega_measure: float, p: float) -> float:
    """``(2 L (|Omega| + c))^(1/p)``."""
    if L < 1 or c < 1 or p < 1 or omega_measure <= 0:
        raise ValueError("need L, c, p >= 1 and positive measure")
    return (2 * L * (omega_measure + c)) ** (1.0 / p)


@dataclass
class EmbeddingReport:
    constant: float
    lhs: list
    rhs: list

    @property
    def failures(self) -> list[int]:
        return [i for i, (a, b) in enumerate(zip(self.lhs, self.rhs)) if not a <= b]

    @property
    def passed(self) -> bool:
        return not self.failures


def verify_embedding_hypotheses(phi: PhiFunction, p: float, L: float, c: float, domain: GridDomain,
                                **ainc_kw) -> None:
    """Raise :class:`HypothesisError` unless ``1/c <= phi(x,1) <= c`` and aInc(p) holds with ``L``."""
    lo, hi = anchor_bounds(phi, domain)
    if not (1 / c <= lo and hi <= c):
        raise HypothesisError(f"phi(x,1) ranges over [{lo}, {hi}], outside [1/{c}, {c}]")
    report = estimate_ainc_constant(phi, p, domain, L=L, **ainc_kw)
    if not report.holds:
        raise HypothesisError(f"aInc({p}) fails with L={L}: sampled constant {report.estimated_L}")


def embedding_check(phi: PhiFunction, p: float, L: float, c: float, fields: Sequence[SampledField],
                    domain: GridDomain, rel_tol: float = 1e-6, verify: bool = True) -> EmbeddingReport:
    """Check ``||f||_p <= (2 L (|Omega| + c))^(1/p) ||f||_phi`` for each field.

    Hypotheses are verified first and a failure raises :class:`HypothesisError`.
    """
    if verify:
        verify_embedding_hypotheses(phi, p, L, c, domain)
    C = embedding_constant(L, c, domain.measure, p)
    lhs, rhs = [], []
    for f in fields:
        lhs.append(lp_norm(f, p, domain))
        rhs.append(C * luxemburg_norm(phi, f, domain, min(rel_tol, 1e-8)).value * (1 + rel_tol))
    return EmbeddingReport(C, lhs, rhs)


__all__.append("verify_embedding_hypotheses")


@dataclass
class ModularBoundReport:
    bound: float
    norm: float
    holds: bool


def norm_from_modular_bound(phi: PhiFunction, field: SampledField, p: float, L: float,
                            domain: GridDomain | None = None, rel_tol: float = 1e-6) -> ModularBoundReport:
    """``||f|| <= max{(L rho(f))^(1/p), 1}`` for phi satisfying aInc(p) with constant L."""
    domain = domain or field.domain
    rho = modular(phi, field, domain)
    bound = max((L * rho) ** (1.0 / p), 1.0)
    norm = luxemburg_norm(phi, field, domain, min(rel_tol, 1e-8)).value
    return ModularBoundReport(bound, norm, norm <= bound * (1 + rel_tol))


def norm_results_to_csv(rows, path) -> None:
    """Rows of ``(field_id, phi_id, modular, norm_result)``."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("field_id,phi_id,modular,norm,iterations,tolerance_met\n")
        for field_id, phi_id, rho, res in rows:
            fh.write(f"{field_id},{phi_id},{rho:.17g},{res.value:.17g},{res.iterations},"
                     f"{str(res.tolerance_met).lower()}\n")
