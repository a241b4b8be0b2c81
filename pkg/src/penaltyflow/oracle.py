"""High-precision solutions of the frozen-parameter inclusions.

For fixed ``eps > 0`` and ``beta >= 0`` the inclusion

    0 in A(x) + D(x) + eps x + beta B(x)

is strongly monotone and has a unique solution ``xbar(eps, beta)``.  This
module computes it, follows it along ``eps_n -> 0``, ``beta_n -> inf`` to the
least-norm solution of the unregularized problem, and checks numerically
the Lipschitz bound of the solution map and the decay of ``||B(xbar_n)||``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numpy as np

from .errors import ContractError, NonConvergenceError
from .operators import ProblemInstance, as_point, lipschitz_modulus

__all__ = [
    "AuxiliarySolution",
    "solve_auxiliary",
    "parameter_sequence",
    "least_norm_solution",
    "estimate_ell",
    "random_parameter_pairs",
    "Prop2Row",
    "SolutionMapReport",
    "verify_solution_map_lipschitz",
    "DecayRow",
    "DecayReport",
    "verify_feasibility_decay",
]

STEP_FRACTION = 0.5
POLISH_STEPS = 3


@dataclass(frozen=True)
class AuxiliarySolution:
    eps: float
    beta: float
    x_bar: np.ndarray
    residual: float
    iterations: int


def _newton_ready(problem: ProblemInstance) -> bool:
    return (problem.A.diag_jacobian is not None and problem.D.jacobian is not None
            and problem.B.jacobian is not None)


def _newton_direction(problem, eps, beta, lam, x, vx, F):
    """Semismooth Newton direction for ``F(x) = x - J(x - lam V(x))``."""
    n = problem.dim
    s = problem.A.diag_jacobian(lam, x - lam * vx)
    JV = problem.D.jacobian(x) + eps * np.eye(n) + beta * problem.B.jacobian(x)
    G = np.eye(n) - s[:, None] * (np.eye(n) - lam * JV)
    try:
        return np.linalg.solve(G, -F)
    except np.linalg.LinAlgError:
        return None


def _polish(problem, eps, beta, lam, x, vx, p, F, res, k, residual_at, steps=POLISH_STEPS):
    # The stopping test is on the lam-scaled residual, and lam ~ 1/beta, so at large
    # beta a converged point can still be far from xbar; extra Newton steps are cheap.
    for _ in range(steps):
        d = _newton_direction(problem, eps, beta, lam, x, vx, F)
        if d is None or not np.all(np.isfinite(d)):
            break
        xn = x + d
        vn, pn, Fn = residual_at(xn)
        rn = float(np.linalg.norm(Fn))
        if not rn <= 0.9 * res:
            break
        x, vx, p, F, res, k = xn, vn, pn, Fn, rn, k + 1
    return x, p, res, k


def solve_auxiliary(problem: ProblemInstance, eps: float, beta: float, tol: float = 1e-10,
                    max_iter: int = 200_000, x0=None, method: str = "auto") -> AuxiliarySolution:
    """Solve ``0 in A(x) + V_{eps,beta}(x)`` by the frozen-parameter Tseng iteration.

    The step is ``lam = 0.5 / L_{eps,beta}``; iteration stops once
    ``||x_k - p_k|| <= tol * max(1, ||x_k||)`` and returns ``p_k``.

    With ``method="auto"`` and Jacobians available on all three operators,
    each iteration first tries a semismooth Newton step on the fixed-point
    residual and keeps it only if the residual drops by 10%; otherwise the
    plain Tseng step is taken.  ``method="tseng"`` disables Newton.
    """
    if not eps > 0:
        raise ContractError(f"eps must be positive, got {eps}")
    if not beta >= 0:
        raise ContractError(f"beta must be nonnegative, got {beta}")
    if method not in ("auto", "tseng"):
        raise ContractError(f"unknown method {method!r}")
    eps, beta = float(eps), float(beta)
    lam = STEP_FRACTION / lipschitz_modulus(problem.eta, problem.mu, eps, beta)
    x = np.zeros(problem.dim) if x0 is None else as_point(x0, problem.dim).copy()
    newton = method == "auto" and _newton_ready(problem)
    best = math.inf

    def residual_at(y):
        vy = problem.V(eps, beta, y)
        p = problem.A(lam, y - lam * vy)
        return vy, p, y - p

    vx, p, F = residual_at(x)
    for k in range(max_iter + 1):
        res = float(np.linalg.norm(F))
        best = min(best, res)
        if res <= tol * max(1.0, float(np.linalg.norm(x))):
            if newton:
                x, p, res, k = _polish(problem, eps, beta, lam, x, vx, p, F, res, k, residual_at)
            return AuxiliarySolution(eps, beta, p, res, k)
        if k == max_iter:
            break
        if newton:
            d = _newton_direction(problem, eps, beta, lam, x, vx, F)
            if d is not None and np.all(np.isfinite(d)):
                xn = x + d
                vn, pn, Fn = residual_at(xn)
                if np.linalg.norm(Fn) <= 0.9 * res:
                    x, vx, p, F = xn, vn, pn, Fn
                    continue
        x = p + lam * (vx - problem.V(eps, beta, p))
        vx, p, F = residual_at(x)
    raise NonConvergenceError(f"auxiliary solve (eps={eps:g}, beta={beta:g}) did not reach tol={tol:g} "
                              f"in {max_iter} iterations", best_residual=best, iterations=max_iter)


def parameter_sequence(problem: ProblemInstance, rho: float = 0.5, n_max: int = 60, eps0: float = 1.0,
                       beta0: float = 1.0, tol: float = 1e-12, beta_growth: bool = True,
                       max_iter: int = 200_000) -> Iterator[AuxiliarySolution]:
    """Warm-started solutions along ``eps_n = eps0 rho^n``, ``beta_n = beta0 / rho^n``.

    With ``beta_growth=False`` the penalty stays at ``beta0`` (control case).
    """
    if not 0.0 < rho < 1.0:
        raise ContractError("rho must lie in (0, 1)")
    x = None
    for n in range(n_max + 1):
        eps_n = eps0 * rho**n
        beta_n = beta0 / rho**n if beta_growth else beta0
        sol = solve_auxiliary(problem, eps_n, beta_n, tol=tol, x0=x, max_iter=max_iter)
        x = sol.x_bar
        yield sol


def least_norm_solution(problem: ProblemInstance, tol: float = 1e-8, rho: float = 0.5,
                        n_max: int = 60, inner_tol: Optional[float] = None) -> np.ndarray:
    """Limit of ``xbar(eps_n, beta_n)``: the least-norm element of ``zer(Phi)``.

    Stops at the first ``n`` with ``||xbar_n - xbar_{n-1}|| <= tol``.  For
    ``rho > 1/2`` the threshold is tightened to ``tol (1 - rho) / rho``: with
    geometric convergence the remaining distance to the limit is about
    ``rho / (1 - rho)`` times the last step.

    A step only counts when the iterate also has a fixed-point residual below
    ``tol`` at the first step size ``lam_0``.  The solver's own test uses
    ``lam_n ~ 1/beta_n``; far out in the sequence ``x - lam_n V(x)`` rounds to
    ``x`` and that test is met by stagnation alone.
    """
    inner = min(1e-12, 1e-3 * tol) if inner_tol is None else inner_tol
    step_tol = tol * min(1.0, (1.0 - rho) / rho)
    lam0 = STEP_FRACTION / lipschitz_modulus(problem.eta, problem.mu, 1.0, 1.0)
    prev = None
    for n, sol in enumerate(parameter_sequence(problem, rho, n_max, tol=inner)):
        x = sol.x_bar
        r0 = x - problem.A(lam0, x - lam0 * problem.V(sol.eps, sol.beta, x))
        trusted = float(np.linalg.norm(r0)) <= tol
        if prev is not None and trusted and np.linalg.norm(sol.x_bar - prev) <= step_tol:
            return sol.x_bar
        prev = sol.x_bar
    raise NonConvergenceError(f"least-norm sequence did not settle to {tol:g} within n={n_max}")


def estimate_ell(problem: ProblemInstance, a_hat: float, directions: int = 128, seed: int = 0) -> float:
    """``max(max ||B(x)|| over sampled x with ||x|| = a_hat, a_hat)``.

    ``||B(.)||`` is convex for the shipped penalties, so its maximum over the
    ball sits on the sphere; the centre is included as well.
    """
    rng = np.random.default_rng(seed)
    best = float(np.linalg.norm(problem.B(np.zeros(problem.dim))))
    for _ in range(directions):
        u = rng.standard_normal(problem.dim)
        u *= a_hat / np.linalg.norm(u)
        best = max(best, float(np.linalg.norm(problem.B(u))))
    return max(best, a_hat)


def random_parameter_pairs(count: int, seed: int = 0, eps_range=(1e-3, 1.0), beta_range=(1.0, 100.0)) -> list:
    """Log-uniform ``((eps1, beta1), (eps2, beta2))`` pairs."""
    rng = np.random.default_rng(seed)

    def draw(lo, hi):
        return float(np.exp(rng.uniform(np.log(lo), np.log(hi))))

    return [((draw(*eps_range), draw(*beta_range)), (draw(*eps_range), draw(*beta_range)))
            for _ in range(count)]


@dataclass(frozen=True)
class Prop2Row:
    pair: int
    eps1: float
    beta1: float
    eps2: float
    beta2: float
    lhs: float
    rhs: float

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs


@dataclass(frozen=True)
class SolutionMapReport:
    rows: tuple
    ell_hat: float
    a_hat: float
    threshold: float

    @property
    def min_margin(self) -> float:
        return min((r.margin for r in self.rows), default=math.inf)

    @property
    def passed(self) -> bool:
        return self.min_margin >= self.threshold


def verify_solution_map_lipschitz(problem: ProblemInstance, pairs: Sequence, tol: float = 1e-10,
                                  a_hat: Optional[float] = None, least_norm_tol: float = 1e-6,
                                  seed: int = 0) -> SolutionMapReport:
    """Both sides of ``||xbar(t2) - xbar(t1)|| <= (ell / eps1)(|beta2 - beta1| + |eps2 - eps1|)``.

    ``ell`` is estimated by ``estimate_ell`` at radius ``a_hat``, which
    defaults to ``||least_norm_solution|| + least_norm_tol``.  The report
    fails if any margin is below ``-10 tol``.
    """
    if a_hat is None:
        a_hat = float(np.linalg.norm(least_norm_solution(problem, tol=least_norm_tol))) + least_norm_tol
    ell = estimate_ell(problem, a_hat, seed=seed)
    cache = {}

    def xbar(e, b):
        if (e, b) not in cache:
            cache[(e, b)] = solve_auxiliary(problem, e, b, tol=tol).x_bar
        return cache[(e, b)]

    rows = []
    for k, ((e1, b1), (e2, b2)) in enumerate(pairs):
        if not (e1 > 0 and e2 > 0):
            raise ContractError("all eps must be positive")
        lhs = float(np.linalg.norm(xbar(e2, b2) - xbar(e1, b1)))
        rhs = ell / e1 * (abs(b2 - b1) + abs(e2 - e1))
        rows.append(Prop2Row(k, e1, b1, e2, b2, lhs, rhs))
    return SolutionMapReport(tuple(rows), ell, a_hat, -10.0 * tol)


@dataclass(frozen=True)
class DecayRow:
    n: int
    eps: float
    beta: float
    norm_xbar: float
    norm_B_xbar: float
    bound: Optional[float] = None  # right-hand side of the squared-gap inequality


@dataclass(frozen=True)
class DecayReport:
    rows: tuple
    status: str  # "pass", "fail" or "inconclusive"
    monotone: bool
    decayed: bool
    inequality_ok: Optional[bool] = None
    notes: tuple = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return self.status == "pass"


def verify_feasibility_decay(problem: ProblemInstance, rho: float = 0.5, n_max: int = 20, z=None,
                             xi_bound: Optional[float] = None, tol: float = 1e-12,
                             beta_growth: bool = True, eps0: float = 1.0, beta0: float = 1.0,
                             slack: float = 1e-10) -> DecayReport:
    """Track ``||B(xbar_n)||`` along the geometric parameter sequence.

    When ``xi_bound`` (a bound on the norm of the normal-cone element at the
    solution ``z``) is supplied, also checks

        ||B(xbar_n)||^2 <= eps_n/(gamma beta_n) ||xbar_n|| ||z - xbar_n||
                           + xi_bound/(gamma beta_n) ||xbar_n - z||

    ``z`` defaults to the stored least-norm solution.  Decay is only
    expected when the penalty grows; with ``beta_growth=False`` the status
    is "inconclusive".
    """
    if z is None and problem.solution_info is not None:
        z = problem.solution_info.least_norm
    z = None if z is None else as_point(z, problem.dim)
    gamma = problem.gamma
    rows = []
    ineq = []
    for n, sol in enumerate(parameter_sequence(problem, rho, n_max, eps0, beta0, tol, beta_growth)):
        gap = float(np.linalg.norm(problem.B(sol.x_bar)))
        bound = None
        if xi_bound is not None and z is not None:
            d = float(np.linalg.norm(z - sol.x_bar))
            bound = (sol.eps / (gamma * sol.beta) * float(np.linalg.norm(sol.x_bar)) * d
                     + xi_bound / (gamma * sol.beta) * d)
            ineq.append(gap**2 <= bound + slack)
        rows.append(DecayRow(n, sol.eps, sol.beta, float(np.linalg.norm(sol.x_bar)), gap, bound))

    gaps = np.array([r.norm_B_xbar for r in rows])
    monotone = bool(np.all(np.diff(gaps) <= slack * np.maximum(1.0, gaps[:-1])))
    decayed = bool(gaps[-1] <= 1e-3 * gaps.max()) if gaps.max() > 0 else True
    inequality_ok = all(ineq) if ineq else None
    notes = []
    if not beta_growth:
        status = "inconclusive"
        notes.append("penalty held constant: decay is not implied")
    else:
        status = "pass" if monotone and decayed and inequality_ok is not False else "fail"
    if xi_bound is None:
        notes.append("no normal-cone bound supplied: plain decay check only")
    return DecayReport(tuple(rows), status, monotone, decayed, inequality_ok, tuple(notes))
