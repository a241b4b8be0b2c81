"""Time-varying Tikhonov, penalty and step-size parameters.

A schedule supplies ``eps(t)`` (vanishing Tikhonov weight), ``beta(t)``
(growing penalty weight) and the step ``lam(t)``, plus the derivatives of the
first two.  The convergence conditions for the flow are stated in terms of

    L(t)     = 1/eta + eps(t) + beta(t)/mu
    a(t)     = 2 + 1/(lam eps) + 1/(eta eps) + beta/(mu eps)
    delta(t) = (1 - lam L) / a^2
    kappa(t) = sqrt((1 + 2 lam L) (1 + lam^2 L^2 - 2 lam eps))

For the power-law family ``eps = (t+b)^-(r+q)``, ``beta = (t+b)^q`` those
conditions reduce to three inequalities in ``(q, r)``; other schedules can
only be checked on a finite sampled horizon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, NamedTuple, Optional

import numpy as np

from .errors import ConstructionError, PreconditionError
from .operators import lipschitz_modulus

__all__ = [
    "Schedule",
    "ConditionRecord",
    "ValidationReport",
    "TheoremQuantities",
    "power_law_schedule",
    "constant_schedule",
    "custom_schedule",
    "tabulated_schedule",
    "check_power_law_conditions",
    "power_law_region_flags",
    "theorem_quantities",
    "quantities_from_values",
    "validate_schedule",
    "COND_DELTA_DIVERGES",
    "COND_EPS_RATIO",
    "COND_BETA_RATIO",
    "COND_LAMBDA_BETA",
    "COND_EPS_VANISHES",
]

COND_DELTA_DIVERGES = "2q+r<1/2"
COND_EPS_RATIO = "2r+3q<1"
COND_BETA_RATIO = "2q+r≤1/3"
COND_LAMBDA_BETA = "limsup λβ<μ"
COND_EPS_VANISHES = "lim ε(t)=0 implied by (b)"

DEFAULT_SIGMA = 0.5

_trapezoid = getattr(np, "trapezoid", None) or np.trapz


@dataclass(frozen=True)
class Schedule:
    """Parameter curves of the flow.

    ``lam`` is normally ``sigma / L(t)``; ``params`` keeps the construction
    parameters (``b, q, r`` for power laws) for symbolic validation.
    """

    eps: Callable[[float], float]
    beta: Callable[[float], float]
    lam: Callable[[float], float]
    eps_dot: Callable[[float], float]
    beta_dot: Callable[[float], float]
    kind: str
    sigma: Optional[float] = None
    params: dict = field(default_factory=dict)

    def values(self, t: float) -> tuple:
        return self.eps(t), self.beta(t), self.lam(t)


def _step_rule(eps, beta, sigma, eta, mu):
    if not 0.0 < sigma < 1.0:
        raise ConstructionError(f"sigma must lie in (0, 1), got {sigma}")
    lipschitz_modulus(eta, mu, 1.0, 1.0)  # validates eta, mu
    inv_eta = 1.0 / eta
    inv_mu = 1.0 / mu

    def lam(t):
        return sigma / (inv_eta + eps(t) + beta(t) * inv_mu)

    return lam


def power_law_schedule(b: float = 1.0, q: float = 0.1, r: float = 0.1, sigma: float = DEFAULT_SIGMA,
                       eta: float = 1.0, mu: float = 1.0) -> Schedule:
    """``eps = (t+b)^-(r+q)``, ``beta = (t+b)^q``, ``lam = sigma / L(t)``."""
    for name, v in (("b", b), ("q", q), ("r", r)):
        if not (v > 0 and math.isfinite(v)):
            raise ConstructionError(f"power-law parameter {name} must be in (0, inf), got {v}")
    b, q, r = float(b), float(q), float(r)
    p = r + q

    def eps(t):
        return (t + b) ** -p

    def beta(t):
        return (t + b) ** q

    def eps_dot(t):
        return -p * (t + b) ** (-p - 1.0)

    def beta_dot(t):
        return q * (t + b) ** (q - 1.0)

    return Schedule(eps, beta, _step_rule(eps, beta, sigma, eta, mu), eps_dot, beta_dot,
                    kind="power-law", sigma=sigma, params={"b": b, "q": q, "r": r, "eta": eta, "mu": mu})


def constant_schedule(eps: float = 1.0, beta: float = 1.0, sigma: float = DEFAULT_SIGMA,
                      eta: float = 1.0, mu: float = 1.0) -> Schedule:
    if not (eps > 0 and beta >= 0):
        raise ConstructionError("constant schedule needs eps > 0 and beta >= 0")
    e, bt = float(eps), float(beta)
    eps_f = lambda t: e  # noqa: E731
    beta_f = lambda t: bt  # noqa: E731
    zero = lambda t: 0.0  # noqa: E731
    return Schedule(eps_f, beta_f, _step_rule(eps_f, beta_f, sigma, eta, mu), zero, zero,
                    kind="constant", sigma=sigma, params={"eps": e, "beta": bt, "eta": eta, "mu": mu})


def custom_schedule(eps, beta, eps_dot, beta_dot, sigma: float = DEFAULT_SIGMA, eta: float = 1.0,
                    mu: float = 1.0, lam=None) -> Schedule:
    """Schedule from arbitrary callables; ``lam`` defaults to ``sigma / L(t)``."""
    if lam is None:
        lam = _step_rule(eps, beta, sigma, eta, mu)
        s = sigma
    else:
        s = None
    return Schedule(eps, beta, lam, eps_dot, beta_dot, kind="custom", sigma=s,
                    params={"eta": eta, "mu": mu})


def tabulated_schedule(times, eps_values, beta_values, sigma: float = DEFAULT_SIGMA,
                       eta: float = 1.0, mu: float = 1.0) -> Schedule:
    """Piecewise-linear schedule through tabulated ``(t, eps, beta)`` knots.

    Values are held constant past the last knot.
    """
    t = np.asarray(times, dtype=float)
    e = np.asarray(eps_values, dtype=float)
    bt = np.asarray(beta_values, dtype=float)
    if not (t.ndim == 1 and t.size >= 2 and t.shape == e.shape == bt.shape):
        raise ConstructionError("schedule table needs >= 2 rows of equal length")
    if t[0] != 0.0 or np.any(np.diff(t) <= 0):
        raise ConstructionError("table times must start at 0 and increase strictly")
    if np.any(e <= 0) or np.any(bt < 0):
        raise ConstructionError("table needs eps > 0 and beta >= 0")
    for arr in (t, e, bt):
        arr.setflags(write=False)
    de = np.diff(e) / np.diff(t)
    db = np.diff(bt) / np.diff(t)

    def slope(s, tt):
        if tt >= t[-1]:
            return 0.0
        return float(s[min(np.searchsorted(t, tt, side="right") - 1, s.size - 1)])

    eps_f = lambda tt: float(np.interp(tt, t, e))  # noqa: E731
    beta_f = lambda tt: float(np.interp(tt, t, bt))  # noqa: E731
    sched = custom_schedule(eps_f, beta_f, lambda tt: slope(de, tt), lambda tt: slope(db, tt),
                            sigma=sigma, eta=eta, mu=mu)
    return Schedule(sched.eps, sched.beta, sched.lam, sched.eps_dot, sched.beta_dot, kind="custom",
                    sigma=sigma, params={"eta": eta, "mu": mu, "table": True})


# -- validation reports -------------------------------------------------------

@dataclass(frozen=True)
class ConditionRecord:
    name: str
    formula: str
    passed: bool
    mode: str  # "symbolic" or "sampled"
    worst_t: Optional[float] = None
    margin: Optional[float] = None
    note: str = ""

    def as_dict(self) -> dict:
        return {"name": self.name, "formula": self.formula, "passed": self.passed, "mode": self.mode,
                "worst_t": self.worst_t, "margin": self.margin, "note": self.note}


@dataclass(frozen=True)
class ValidationReport:
    conditions: tuple
    title: str = "schedule validation"

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.conditions)

    @property
    def sampled(self) -> bool:
        return any(c.mode == "sampled" for c in self.conditions)

    def failed(self) -> list:
        return [c.name for c in self.conditions if not c.passed]

    def to_records(self) -> list:
        return [c.as_dict() for c in self.conditions]

    def to_text(self) -> str:
        lines = [f"{self.title}: {'PASS' if self.passed else 'FAIL'}"]
        if self.sampled:
            lines.append("note: sampled on a finite horizon, not a proof")
        for c in self.conditions:
            extra = []
            if c.margin is not None:
                extra.append(f"margin={c.margin:.6g}")
            if c.worst_t is not None:
                extra.append(f"worst_t={c.worst_t:.6g}")
            if c.note:
                extra.append(c.note)
            tail = f" ({', '.join(extra)})" if extra else ""
            lines.append(f"  [{'pass' if c.passed else 'FAIL'}] {c.name}: {c.formula} [{c.mode}]{tail}")
        return "\n".join(lines) + "\n"


def _exact(x) -> Fraction:
    # decimal reading of the float, so 0.1 means 1/10
    return Fraction(repr(float(x)))


def power_law_region_flags(q: float, r: float) -> dict:
    """The three power-law inequalities in ``(q, r)``, evaluated exactly."""
    fq, fr = _exact(q), _exact(r)
    return {
        COND_DELTA_DIVERGES: 2 * fq + fr < Fraction(1, 2),
        COND_EPS_RATIO: 2 * fr + 3 * fq < 1,
        COND_BETA_RATIO: 2 * fq + fr <= Fraction(1, 3),
    }


def check_power_law_conditions(q: float, r: float) -> ValidationReport:
    if not (q > 0 and r > 0):
        raise PreconditionError("q and r must be positive")
    flags = power_law_region_flags(q, r)
    fq, fr = _exact(q), _exact(r)
    margins = {
        COND_DELTA_DIVERGES: Fraction(1, 2) - (2 * fq + fr),
        COND_EPS_RATIO: 1 - (2 * fr + 3 * fq),
        COND_BETA_RATIO: Fraction(1, 3) - (2 * fq + fr),
    }
    formulas = {
        COND_DELTA_DIVERGES: "integral of eps^2/beta^2 diverges, so delta is not integrable",
        COND_EPS_RATIO: "eps_dot beta^2 / eps^3 -> 0",
        COND_BETA_RATIO: "beta_dot beta^2 / eps^3 bounded",
    }
    recs = tuple(ConditionRecord(name, formulas[name], flags[name], "symbolic", margin=float(margins[name]))
                 for name in (COND_DELTA_DIVERGES, COND_EPS_RATIO, COND_BETA_RATIO))
    return ValidationReport(recs, title=f"power-law conditions (q={q:g}, r={r:g})")


class TheoremQuantities(NamedTuple):
    L: float
    a: float
    delta: float
    kappa: float


def quantities_from_values(lam: float, eps: float, beta: float, eta: float, mu: float) -> TheoremQuantities:
    """``L, a, delta, kappa`` for frozen parameter values."""
    if not lam * eps < 1.0 / eta + beta / mu:
        raise PreconditionError(f"hypothesis λε < 1/η + β/μ violated: λε={lam * eps:.6g}, "
                                f"1/η + β/μ={1.0 / eta + beta / mu:.6g}")
    L = lipschitz_modulus(eta, mu, eps, beta)
    a = 2.0 + 1.0 / (lam * eps) + 1.0 / (eta * eps) + beta / (mu * eps)
    delta = (1.0 - lam * L) / a**2
    kappa = math.sqrt((1.0 + 2.0 * lam * L) * (1.0 + lam**2 * L**2 - 2.0 * lam * eps))
    return TheoremQuantities(L, a, delta, kappa)


def theorem_quantities(schedule: Schedule, eta: float, mu: float, t: float) -> TheoremQuantities:
    eps, beta, lam = schedule.values(t)
    return quantities_from_values(lam, eps, beta, eta, mu)


def _log_grid(horizon: float, grid: int) -> np.ndarray:
    lo = min(1e-3, horizon / 10.0)
    return np.concatenate(([0.0], np.geomspace(lo, horizon, grid - 1)))


def _tail_slope(t: np.ndarray, y: np.ndarray) -> float:
    """Least-squares slope of log|y| against log t over the last decade of the grid."""
    mask = t >= t[-1] / 10.0
    yy = np.abs(y[mask])
    if np.any(yy == 0):
        return -math.inf if np.all(yy == 0) else math.nan
    return float(np.polyfit(np.log(t[mask]), np.log(yy), 1)[0])


def validate_schedule(schedule: Schedule, eta: float, mu: float, horizon: float = 1e4,
                      grid: int = 400) -> ValidationReport:
    """Check the hypotheses of the convergence theorem for ``schedule``.

    Power-law schedules are decided symbolically.  Any other schedule is
    sampled on a log-spaced grid of ``[0, horizon]``; asymptotic statements
    are judged from log-log slopes over the last sampled decade.
    """
    if not (horizon > 0 and grid >= 2):
        raise PreconditionError("need horizon > 0 and grid >= 2")
    if schedule.kind == "power-law" and schedule.sigma is not None:
        p = schedule.params
        report = check_power_law_conditions(p["q"], p["r"])
        lb = schedule.sigma * mu
        recs = report.conditions + (
            ConditionRecord(COND_LAMBDA_BETA, "λβ = σβ/L ≤ σμ < μ", schedule.sigma < 1.0, "symbolic",
                            margin=(1.0 - schedule.sigma) if math.isinf(mu) else mu - lb),
            ConditionRecord("monotone schedule", "ε decreasing, β increasing (q, r, b > 0)", True, "symbolic"),
        )
        return ValidationReport(recs, title=f"schedule validation (power law b={p['b']:g}, q={p['q']:g}, "
                                            f"r={p['r']:g}, σ={schedule.sigma:g})")
    return _validate_sampled(schedule, eta, mu, horizon, grid)


def _validate_sampled(schedule, eta, mu, horizon, grid):
    ts = _log_grid(horizon, grid)
    eps = np.array([schedule.eps(t) for t in ts])
    beta = np.array([schedule.beta(t) for t in ts])
    lam = np.array([schedule.lam(t) for t in ts])
    eps_dot = np.array([schedule.eps_dot(t) for t in ts])
    beta_dot = np.array([schedule.beta_dot(t) for t in ts])
    L = 1.0 / eta + eps + beta / mu
    recs = []

    def worst(values):
        k = int(np.argmin(values))
        return float(ts[k]), float(values[k])

    wt, m = worst(np.minimum(eps, np.append(-np.diff(eps), np.inf)))
    recs.append(ConditionRecord("monotone ε", "ε(t) > 0 and strictly decreasing", m > 0, "sampled", wt, m))
    wt, m = worst(np.minimum(beta, np.append(np.diff(beta), np.inf)))
    recs.append(ConditionRecord("monotone β", "β(t) > 0 and nondecreasing", m >= 0 and beta.min() > 0,
                                "sampled", wt, m))
    wt, m = worst(1.0 - lam * L)
    recs.append(ConditionRecord("λL<1", "λ(t) L(t) < 1", m > 0, "sampled", wt, m))
    lb_margin = mu - lam * beta if not math.isinf(mu) else np.ones_like(lam)
    wt, m = worst(lb_margin)
    recs.append(ConditionRecord(COND_LAMBDA_BETA, "λ(t) β(t) < μ on the grid", m > 0, "sampled", wt, m))

    tail_eps = _tail_slope(ts[1:], eps[1:])
    recs.append(ConditionRecord(COND_EPS_VANISHES, "ε(t) → 0 (tail log-log slope < 0)",
                                bool(tail_eps < 0), "sampled", float(ts[-1]), -tail_eps,
                                note="non-vanishing Tikhonov term" if not tail_eps < 0 else ""))

    hyp = lam * eps < 1.0 / eta + beta / mu
    if not np.all(hyp):
        recs.append(ConditionRecord("λε<1/η+β/μ", "needed for δ and κ to be defined", False, "sampled",
                                    float(ts[np.argmin(hyp)]), None))
        return ValidationReport(tuple(recs), title=f"schedule validation ({schedule.kind})")
    a = 2.0 + 1.0 / (lam * eps) + 1.0 / (eta * eps) + beta / (mu * eps)
    delta = (1.0 - lam * L) / a**2
    s_delta = _tail_slope(ts[1:], delta[1:])
    recs.append(ConditionRecord("lim δ(t)=0", "δ(t) → 0 (tail log-log slope < 0)", bool(s_delta < 0),
                                "sampled", float(ts[-1]), -s_delta))
    recs.append(ConditionRecord("∫δ=∞", "∫δ diverges (tail slope of δ ≥ -1)", bool(s_delta >= -1.0),
                                "sampled", float(ts[-1]), s_delta + 1.0,
                                note=f"trapezoid integral to horizon = {_trapezoid(delta, ts):.6g}"))
    ratio_eps = np.abs(eps_dot) / (eps * delta)
    s_re = _tail_slope(ts[1:], ratio_eps[1:])
    recs.append(ConditionRecord("ε̇/(εδ)→0", "|ε̇|/(εδ) decreasing to 0 (tail slope < 0)", bool(s_re < 0),
                                "sampled", float(ts[-1]), -s_re if math.isfinite(s_re) else None))
    ratio_beta = beta_dot / (eps * delta)
    s_rb = _tail_slope(ts[1:], ratio_beta[1:])
    recs.append(ConditionRecord("β̇/(εδ)=O(1)", "β̇/(εδ) bounded (tail slope ≤ 0)", bool(s_rb <= 1e-9),
                                "sampled", float(ts[-1]), -s_rb if math.isfinite(s_rb) else None))
    return ValidationReport(tuple(recs), title=f"schedule validation ({schedule.kind}, sampled, not a proof)")
