"""The penalty-regulated Tseng vector field and its diagnostic bounds.

With ``V(t, x) = D(x) + eps(t) x + beta(t) B(x)`` and step ``lam = lam(t)``

    p    = J_{lam A}(x - lam V(t, x))
    xdot = p - x + lam (V(t, x) - V(t, p))

which equals ``(R o J_{lam A} o R)(x) - R(x)`` for the reflection
``R(y) = y - lam V(t, y)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import PreconditionError
from .operators import ProblemInstance, as_point, eval_V, lipschitz_modulus
from .schedules import Schedule

__all__ = [
    "FieldEvaluation",
    "GrowthEstimate",
    "reflect",
    "tseng_step",
    "tseng_field",
    "tseng_field_composition",
    "selected_A_element",
    "field_lipschitz_probe",
    "growth_probe",
]

PROBE_RADII = (1.0, 10.0, 100.0)


@dataclass(frozen=True)
class FieldEvaluation:
    p: np.ndarray
    xdot: np.ndarray
    residual_fp: float
    lam: float
    eps: float
    beta: float


class GrowthEstimate(NamedTuple):
    C_hat: float
    worst_norm: float


def reflect(problem: ProblemInstance, eps: float, beta: float, lam: float, x) -> np.ndarray:
    """``x - lam * V_{eps,beta}(x)``."""
    if not lam > 0:
        raise PreconditionError(f"step lam must be positive, got {lam}")
    x = as_point(x, problem.dim)
    return x - lam * eval_V(problem, eps, beta, x)


def tseng_step(problem: ProblemInstance, eps: float, beta: float, lam: float, x: np.ndarray):
    """Unchecked frozen-parameter step; returns ``(p, xdot)``."""
    vx = problem.V(eps, beta, x)
    p = problem.A(lam, x - lam * vx)
    return p, p - x + lam * (vx - problem.V(eps, beta, p))


def _params(problem, schedule, t):
    eps, beta, lam = schedule.values(t)
    L = lipschitz_modulus(problem.eta, problem.mu, eps, beta)
    if not lam * L < 1.0:
        raise PreconditionError(f"step condition violated at t={t:g}: λL = {lam * L:.6g} ≥ 1")
    return eps, beta, lam


def tseng_field(problem: ProblemInstance, schedule: Schedule, t: float, x) -> FieldEvaluation:
    eps, beta, lam = _params(problem, schedule, t)
    x = as_point(x, problem.dim)
    p, xdot = tseng_step(problem, eps, beta, lam, x)
    return FieldEvaluation(p, xdot, float(np.linalg.norm(x - p)), lam, eps, beta)


def tseng_field_composition(problem: ProblemInstance, schedule: Schedule, t: float, x) -> np.ndarray:
    """Same field written as ``R(J(R x)) - R x``; used to cross-check ``tseng_field``."""
    eps, beta, lam = _params(problem, schedule, t)
    x = as_point(x, problem.dim)

    def R(y):
        return y - lam * problem.V(eps, beta, y)

    rx = R(x)
    return R(problem.A(lam, rx)) - rx


def selected_A_element(problem: ProblemInstance, ev: FieldEvaluation, x) -> np.ndarray:
    """The element of ``A(p)`` picked out by the resolvent: ``(x - lam V(x) - p) / lam``."""
    x = as_point(x, problem.dim)
    return (x - ev.lam * problem.V(ev.eps, ev.beta, x) - ev.p) / ev.lam


def _step_hypothesis(problem, lam, eps, beta, t=None):
    rhs = 1.0 / problem.eta + beta / problem.mu
    if not lam * eps < rhs:
        where = "" if t is None else f" at t={t:g}"
        raise PreconditionError(f"hypothesis λε < 1/η + β/μ violated{where}")


def field_lipschitz_probe(problem: ProblemInstance, schedule: Schedule, t: float, samples: int = 200,
                          seed: int = 0) -> float:
    """Largest sampled ratio ``||f(t,x) - f(t,y)|| / ||x - y||``."""
    eps, beta, lam = schedule.values(t)
    _step_hypothesis(problem, lam, eps, beta, t)
    rng = np.random.default_rng(seed)
    best = 0.0
    for k in range(samples):
        r = PROBE_RADII[k % len(PROBE_RADII)]
        x = r * rng.standard_normal(problem.dim)
        y = r * rng.standard_normal(problem.dim)
        h = np.linalg.norm(x - y)
        if h == 0.0:
            continue
        fx = tseng_field(problem, schedule, t, x).xdot
        fy = tseng_field(problem, schedule, t, y).xdot
        best = max(best, float(np.linalg.norm(fx - fy) / h))
    return best


def growth_probe(problem: ProblemInstance, lam: float, eps: float, beta: float, samples: int = 200,
                 seed: int = 0, radius: float = 1e3) -> GrowthEstimate:
    """Empirical constant ``C`` in ``||F(x)|| <= C (1 + ||x||)`` for frozen parameters.

    Samples ``x = 0`` and random directions with norms log-spaced in ``[1, radius]``.
    """
    if not lam < 1.0 / lipschitz_modulus(problem.eta, problem.mu, eps, beta):
        raise PreconditionError("hypothesis λ < 1/(1/η + ε + β/μ) violated")
    rng = np.random.default_rng(seed)
    norms = np.geomspace(1.0, radius, max(samples - 1, 1))
    points = [np.zeros(problem.dim)]
    for r in norms:
        g = rng.standard_normal(problem.dim)
        points.append(r * g / np.linalg.norm(g))
    best, at = 0.0, 0.0
    for x in points:
        _, F = tseng_step(problem, eps, beta, lam, x)
        nx = float(np.linalg.norm(x))
        c = float(np.linalg.norm(F)) / (1.0 + nx)
        if c > best:
            best, at = c, nx
    return GrowthEstimate(best, at)
