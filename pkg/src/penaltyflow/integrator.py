"""Fixed-step explicit integration of ``xdot = f(t, x)`` with trajectory recording."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .dynamics import tseng_step
from .errors import ContractError, DivergenceError, PreconditionError
from .operators import ProblemInstance, as_point
from .schedules import Schedule

__all__ = ["IntegratorConfig", "Trajectory", "integrate", "attach_oracle_distance", "METHODS"]

METHODS = ("euler", "rk4")
DIVERGENCE_NORM = 1e12


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "rk4"
    t_end: float = 200.0
    step: float = 0.01
    record_stride: int = 1
    initial_point: tuple = (0.0,)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ContractError(f"unknown integration method {self.method!r}; expected one of {METHODS}")
        if not (self.t_end > 0 and self.step > 0 and self.step < self.t_end):
            raise ContractError("need 0 < step < t_end")
        if int(self.record_stride) != self.record_stride or self.record_stride < 1:
            raise ContractError("record_stride must be a positive integer")
        object.__setattr__(self, "initial_point", tuple(as_point(self.initial_point).tolist()))


@dataclass(frozen=True)
class Trajectory:
    """Recorded samples, stored column-wise (one row of ``x`` per sample)."""

    t: np.ndarray
    x: np.ndarray
    residual_fp: np.ndarray
    feasibility_gap: np.ndarray
    eps: np.ndarray
    beta: np.ndarray
    lam: np.ndarray
    dist_oracle: Optional[np.ndarray] = None

    def __len__(self):
        return self.t.size

    @property
    def norm_x(self) -> np.ndarray:
        return np.linalg.norm(self.x, axis=1)

    @property
    def final(self) -> dict:
        out = {"t": float(self.t[-1]), "residual_fp": float(self.residual_fp[-1]),
               "feasibility_gap": float(self.feasibility_gap[-1]), "norm_x": float(self.norm_x[-1])}
        if self.dist_oracle is not None:
            out["dist_oracle"] = float(self.dist_oracle[-1])
        return out


def _step_count(t_end: float, h: float) -> int:
    n = round(t_end / h)
    if abs(n * h - t_end) > 1e-9 * t_end:
        n = math.ceil(t_end / h)
    return int(n)


def integrate(problem: ProblemInstance, schedule: Schedule, config: IntegratorConfig) -> Trajectory:
    """Integrate the Tseng flow from ``config.initial_point`` on ``[0, t_end]``.

    Every ``record_stride``-th step is recorded, as well as the final state.
    Raises ``DivergenceError`` when the state stops being finite or exceeds
    norm 1e12, and ``PreconditionError`` when ``lam L >= 1`` at a stage time.
    """
    x = as_point(config.initial_point, problem.dim).copy()
    h = float(config.step)
    t_end = float(config.t_end)
    n_steps = _step_count(t_end, h)
    inv_eta, inv_mu = 1.0 / problem.eta, 1.0 / problem.mu
    values = schedule.values

    def field(t, y):
        eps, beta, lam = values(t)
        if not lam * (inv_eta + eps + beta * inv_mu) < 1.0:
            raise PreconditionError(f"step condition λL < 1 violated at t={t:g}")
        p, xdot = tseng_step(problem, eps, beta, lam, y)
        return p, xdot, eps, beta, lam

    rec_t, rec_x, rec_res, rec_gap, rec_eps, rec_beta, rec_lam = [], [], [], [], [], [], []

    def record(t, y, p, eps, beta, lam):
        rec_t.append(t)
        rec_x.append(y.copy())
        rec_res.append(float(np.linalg.norm(y - p)))
        rec_gap.append(float(np.linalg.norm(problem.B(y))))
        rec_eps.append(eps)
        rec_beta.append(beta)
        rec_lam.append(lam)

    rk4 = config.method == "rk4"
    stride = int(config.record_stride)
    t = 0.0
    for k in range(n_steps):
        t = k * h
        hk = min(h, t_end - t)
        p, k1, eps, beta, lam = field(t, x)
        if k % stride == 0:
            record(t, x, p, eps, beta, lam)
        if rk4:
            k2 = field(t + 0.5 * hk, x + (0.5 * hk) * k1)[1]
            k3 = field(t + 0.5 * hk, x + (0.5 * hk) * k2)[1]
            k4 = field(t + hk, x + hk * k3)[1]
            x_new = x + (hk / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        else:
            x_new = x + hk * k1
        nrm = np.linalg.norm(x_new)
        if not (math.isfinite(nrm) and nrm <= DIVERGENCE_NORM):
            raise DivergenceError(f"state diverged after t={t:g} (norm {nrm:.3e})", last_finite_t=t)
        x = x_new
    t = min(n_steps * h, t_end)
    p, _, eps, beta, lam = field(t, x)
    record(t, x, p, eps, beta, lam)

    return Trajectory(
        t=np.array(rec_t), x=np.array(rec_x), residual_fp=np.array(rec_res),
        feasibility_gap=np.array(rec_gap), eps=np.array(rec_eps), beta=np.array(rec_beta),
        lam=np.array(rec_lam),
    )


def attach_oracle_distance(trajectory: Trajectory, oracle_solutions: Sequence) -> Trajectory:
    """Return a copy with ``dist_oracle[i] = ||x(t_i) - xbar(eps(t_i), beta(t_i))||``."""
    if len(oracle_solutions) != len(trajectory):
        raise ContractError(f"got {len(oracle_solutions)} oracle solutions for {len(trajectory)} samples")
    dist = np.empty(len(trajectory))
    for i, sol in enumerate(oracle_solutions):
        if not (math.isclose(sol.eps, trajectory.eps[i], rel_tol=1e-12)
                and math.isclose(sol.beta, trajectory.beta[i], rel_tol=1e-12, abs_tol=1e-300)):
            raise ContractError(f"oracle solution {i} was computed at different (eps, beta)")
        dist[i] = np.linalg.norm(trajectory.x[i] - sol.x_bar)
    return replace(trajectory, dist_oracle=dist)
