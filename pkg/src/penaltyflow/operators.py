"""Operator roles for the inclusion 0 in A(x) + D(x) + N_C(x).

``A`` is represented only through its resolvent ``J_{lam A} = (Id + lam A)^-1``,
``D`` is a Lipschitz monotone map and ``B`` is a cocoercive penalty map whose
zero set is the constraint set ``C``.  The regularized field

    V_{eps,beta}(x) = D(x) + eps * x + beta * B(x)

is what every other module evaluates.

All constructed objects are immutable: array data captured by the closures
is copied and flagged read-only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ConstructionError, ContractError, NumericalError

__all__ = [
    "Resolvent",
    "LipschitzMap",
    "SolutionInfo",
    "ProblemInstance",
    "ContractCheck",
    "as_point",
    "eval_V",
    "lipschitz_modulus",
    "resolvent_zero",
    "resolvent_box",
    "resolvent_l1",
    "penalty_from_projection",
    "penalty_from_box",
    "penalty_affine",
    "penalty_zero",
    "linear_map",
    "zero_map",
    "spectral_norm_sq",
    "check_firmly_nonexpansive",
    "check_monotone",
    "check_lipschitz",
    "check_cocoercive",
    "check_V_strongly_monotone",
    "check_V_lipschitz",
    "check_problem",
]

Vector = np.ndarray

# radii used for every sampled contract check
SAMPLE_RADII = (1.0, 10.0, 100.0)


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


def as_point(x, dim: Optional[int] = None) -> Vector:
    """Validate and convert ``x`` to a 1-D float array."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1 or arr.size == 0:
        raise ContractError(f"expected a non-empty vector, got shape {arr.shape}")
    if dim is not None and arr.size != dim:
        raise ContractError(f"dimension mismatch: expected {dim}, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise ContractError("vector has non-finite entries")
    return arr


@dataclass(frozen=True)
class Resolvent:
    """Resolvent ``(lam, y) -> J_{lam A}(y)`` of a maximally monotone ``A``.

    ``diag_jacobian(lam, y)``, when present, returns the diagonal of an
    element of the generalized Jacobian of ``J_{lam A}`` at ``y``; the oracle
    uses it for Newton acceleration.
    """

    apply: Callable[[float, Vector], Vector]
    label: str = "A"
    diag_jacobian: Optional[Callable[[float, Vector], Vector]] = None

    def __call__(self, lam: float, y: Vector) -> Vector:
        return self.apply(lam, y)


@dataclass(frozen=True)
class LipschitzMap:
    """Single-valued monotone map with a known Lipschitz constant.

    ``cocoercivity`` is required for maps used in the penalty role.
    ``jacobian(x)``, when present, returns a (generalized) Jacobian matrix.
    """

    fn: Callable[[Vector], Vector]
    lipschitz_constant: float
    cocoercivity: Optional[float] = None
    label: str = "F"
    jacobian: Optional[Callable[[Vector], np.ndarray]] = None

    def __post_init__(self):
        if not self.lipschitz_constant >= 0:
            raise ConstructionError("lipschitz_constant must be nonnegative")
        if self.cocoercivity is not None and not self.cocoercivity > 0:
            raise ConstructionError("cocoercivity constant must be positive")

    def __call__(self, x: Vector) -> Vector:
        return self.fn(x)


@dataclass(frozen=True)
class SolutionInfo:
    """What is known in closed form about ``zer(Phi)`` for a test problem."""

    description: str
    least_norm: Optional[Vector] = None
    feasible_point: Optional[Vector] = None

    @property
    def min_norm(self) -> Optional[float]:
        if self.least_norm is None:
            return None
        return float(np.linalg.norm(self.least_norm))


@dataclass(frozen=True)
class ProblemInstance:
    dim: int
    A: Resolvent
    D: LipschitzMap
    B: LipschitzMap
    name: str = "problem"
    solution_info: Optional[SolutionInfo] = None
    data: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if self.dim < 1:
            raise ConstructionError("dim must be positive")
        if self.B.cocoercivity is None:
            raise ConstructionError("penalty map B needs a cocoercivity constant")
        info = self.solution_info
        if info is not None and info.feasible_point is not None:
            z = as_point(info.feasible_point, self.dim)
            gap = np.linalg.norm(self.B(z))
            if gap > 1e-9 * max(1.0, np.linalg.norm(z)):
                raise ConstructionError(f"stored feasible point has B(x*) = {gap:.3e} != 0")

    @property
    def eta(self) -> float:
        """D is (1/eta)-Lipschitz; ``inf`` when D is constant."""
        L = self.D.lipschitz_constant
        return math.inf if L == 0 else 1.0 / L

    @property
    def mu(self) -> float:
        L = self.B.lipschitz_constant
        return math.inf if L == 0 else 1.0 / L

    @property
    def gamma(self) -> float:
        return self.B.cocoercivity

    def V(self, eps: float, beta: float, x: Vector) -> Vector:
        # unchecked hot path
        return self.D(x) + eps * x + beta * self.B(x)


def eval_V(problem: ProblemInstance, eps: float, beta: float, x) -> Vector:
    """Evaluate ``D(x) + eps*x + beta*B(x)``."""
    if not eps > 0:
        raise ContractError(f"eps must be positive, got {eps}")
    if not beta >= 0:
        raise ContractError(f"beta must be nonnegative, got {beta}")
    x = as_point(x, problem.dim)
    return problem.V(eps, beta, x)


def lipschitz_modulus(eta: float, mu: float, eps: float, beta: float) -> float:
    """Lipschitz modulus ``1/eta + eps + beta/mu`` of ``V_{eps,beta}``."""
    if not (eta > 0 and mu > 0):
        raise ContractError(f"eta and mu must be positive, got eta={eta}, mu={mu}")
    return 1.0 / eta + eps + beta / mu


# -- resolvents -------------------------------------------------------------

def resolvent_zero() -> Resolvent:
    """Resolvent of ``A = 0``: the identity for every step."""
    return Resolvent(
        apply=lambda lam, y: np.array(y, dtype=float),
        label="0",
        diag_jacobian=lambda lam, y: np.ones_like(y, dtype=float),
    )


def resolvent_box(lo, hi) -> Resolvent:
    """Resolvent of the normal cone of ``[lo, hi]``, i.e. the clamp.

    Bounds may be scalars or vectors and may be infinite.
    """
    lo = _frozen(lo)
    hi = _frozen(hi)
    if np.any(np.isnan(lo)) or np.any(np.isnan(hi)):
        raise ConstructionError("box bounds must not be NaN")
    if np.any(lo > hi):
        raise ConstructionError("box bounds need lo <= hi componentwise")

    def apply(lam, y):
        return np.minimum(np.maximum(y, lo), hi)

    def diag_jacobian(lam, y):
        return ((y > lo) & (y < hi)).astype(float)

    return Resolvent(apply, label="N_box", diag_jacobian=diag_jacobian)


def resolvent_l1(weight: float) -> Resolvent:
    """Resolvent of ``d(weight*||.||_1)``: soft thresholding at ``lam*weight``."""
    if not weight > 0:
        raise ConstructionError("l1 weight must be positive")
    weight = float(weight)

    def apply(lam, y):
        return np.sign(y) * np.maximum(np.abs(y) - lam * weight, 0.0)

    def diag_jacobian(lam, y):
        return (np.abs(y) > lam * weight).astype(float)

    return Resolvent(apply, label="d_l1", diag_jacobian=diag_jacobian)


# -- single-valued maps -------------------------------------------------------

def spectral_norm_sq(M, tol: float = 1e-10, max_iter: int = 10000, seed: int = 0) -> float:
    """Largest eigenvalue of ``M^T M`` (squared operator norm) by power iteration.

    The start vector is drawn from a fixed seed so the result is reproducible.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise ContractError("expected a matrix")
    if not np.any(M):
        return 0.0
    v = np.random.default_rng(seed).standard_normal(M.shape[1])
    v /= np.linalg.norm(v)
    prev = 0.0
    for _ in range(max_iter):
        w = M.T @ (M @ v)
        rq = float(v @ w)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            # start vector in the null space; restart along a column of M^T
            v = M[np.argmax(np.abs(M).sum(axis=1))].copy()
            v /= np.linalg.norm(v)
            continue
        if abs(rq - prev) <= tol * rq:
            return rq
        prev = rq
        v = w / nw
    raise NumericalError(f"power iteration did not reach relative tolerance {tol} in {max_iter} iterations")


def linear_map(M, offset=None, label: str = "D") -> LipschitzMap:
    """Affine map ``x -> M x + offset`` with Lipschitz constant ``||M||``.

    Monotonicity (positive semidefinite symmetric part) is the caller's
    responsibility; ``check_monotone`` verifies it by sampling.
    """
    M = _frozen(np.atleast_2d(M))
    off = _frozen(np.zeros(M.shape[0]) if offset is None else offset)
    return LipschitzMap(
        fn=lambda x: M @ x + off,
        lipschitz_constant=math.sqrt(spectral_norm_sq(M)),
        label=label,
        jacobian=lambda x: M,
    )


def zero_map(dim: int, label: str = "0") -> LipschitzMap:
    z = _frozen(np.zeros((dim, dim)))
    return LipschitzMap(fn=lambda x: np.zeros_like(x), lipschitz_constant=0.0,
                        cocoercivity=1.0, label=label, jacobian=lambda x: z)


def penalty_zero(dim: int) -> LipschitzMap:
    """Trivial penalty ``B = 0`` (no constraint, ``C`` is the whole space)."""
    return zero_map(dim, label="B=0")


def penalty_from_projection(project: Callable[[Vector], Vector],
                            project_diag_jacobian: Optional[Callable[[Vector], Vector]] = None,
                            dim: Optional[int] = None, label: str = "Id-P_C") -> LipschitzMap:
    """Penalty ``B = Id - P_C``, the gradient of ``dist(., C)^2 / 2``.

    It is 1-Lipschitz and 1-cocoercive with ``zer(B) = C``.  When ``dim`` is
    given, idempotence of ``project`` is spot-checked on seeded samples.
    """
    if dim is not None:
        rng = np.random.default_rng(0)
        for r in SAMPLE_RADII:
            y = project(r * rng.standard_normal(dim))
            if not np.allclose(project(y), y, rtol=0.0, atol=1e-12 * max(1.0, np.linalg.norm(y))):
                raise ConstructionError("projection is not idempotent")
    jac = None
    if project_diag_jacobian is not None:
        def jac(x):
            return np.diag(1.0 - project_diag_jacobian(x))
    return LipschitzMap(fn=lambda x: x - project(x), lipschitz_constant=1.0,
                        cocoercivity=1.0, label=label, jacobian=jac)


def penalty_from_box(lo, hi, dim: Optional[int] = None) -> LipschitzMap:
    """``B = Id - P_[lo,hi]``."""
    res = resolvent_box(lo, hi)
    return penalty_from_projection(lambda x: res(1.0, x),
                                   lambda x: res.diag_jacobian(1.0, x),
                                   dim=dim, label="Id-P_box")


def penalty_affine(T, rhs) -> LipschitzMap:
    """``B(x) = T^T (T x - rhs)``, the gradient of ``||T x - rhs||^2 / 2``.

    Lipschitz constant ``||T||^2`` and cocoercivity ``1/||T||^2``.
    """
    T = _frozen(np.atleast_2d(T))
    rhs = _frozen(np.atleast_1d(rhs))
    if rhs.shape != (T.shape[0],):
        raise ContractError(f"rhs has shape {rhs.shape}, expected ({T.shape[0]},)")
    if not np.any(T):
        raise ConstructionError("T must be nonzero")
    nrm2 = spectral_norm_sq(T)
    gram = _frozen(T.T @ T)
    return LipschitzMap(fn=lambda x: T.T @ (T @ x - rhs), lipschitz_constant=nrm2,
                        cocoercivity=1.0 / nrm2, label="T^T(Tx-t)",
                        jacobian=lambda x: gram)


# -- sampled contract checks --------------------------------------------------

@dataclass(frozen=True)
class ContractCheck:
    """Outcome of one sampled inequality check.

    ``worst`` is the largest scaled violation ``(lhs - rhs) / max(1, |lhs|, |rhs|)``;
    the check passes when it does not exceed the slack.
    """

    name: str
    passed: bool
    worst: float
    samples: int


def _pairs(dim: int, samples: int, seed: int):
    rng = np.random.default_rng(seed)
    for k in range(samples):
        r = SAMPLE_RADII[k % len(SAMPLE_RADII)]
        yield r * rng.standard_normal(dim), r * rng.standard_normal(dim)


def _scaled(lhs: float, rhs: float) -> float:
    return (lhs - rhs) / max(1.0, abs(lhs), abs(rhs))


def _collect(name, violations, slack, samples):
    worst = max(violations) if violations else -math.inf
    return ContractCheck(name, worst <= slack, worst, samples)


def check_firmly_nonexpansive(res: Resolvent, dim: int, samples: int = 100, seed: int = 0,
                              slack: float = 1e-12, lams: Sequence[float] = (0.1, 1.0, 10.0)) -> ContractCheck:
    viol = []
    for k, (y1, y2) in enumerate(_pairs(dim, samples, seed)):
        lam = lams[k % len(lams)]
        d = res(lam, y1) - res(lam, y2)
        viol.append(_scaled(d @ d, (y1 - y2) @ d))
    return _collect(f"{res.label}: firmly nonexpansive", viol, slack, samples)


def check_monotone(F: LipschitzMap, dim: int, samples: int = 100, seed: int = 0,
                   slack: float = 1e-12) -> ContractCheck:
    viol = []
    for x, y in _pairs(dim, samples, seed):
        viol.append(_scaled(0.0, (F(x) - F(y)) @ (x - y)))
    return _collect(f"{F.label}: monotone", viol, slack, samples)


def check_lipschitz(F: LipschitzMap, dim: int, samples: int = 100, seed: int = 0,
                    slack: float = 1e-12) -> ContractCheck:
    viol = []
    for x, y in _pairs(dim, samples, seed):
        viol.append(_scaled(np.linalg.norm(F(x) - F(y)), F.lipschitz_constant * np.linalg.norm(x - y)))
    return _collect(f"{F.label}: Lipschitz <= {F.lipschitz_constant:.6g}", viol, slack, samples)


def check_cocoercive(F: LipschitzMap, dim: int, samples: int = 100, seed: int = 0,
                     slack: float = 1e-12) -> ContractCheck:
    if F.cocoercivity is None:
        raise ContractError(f"{F.label} has no cocoercivity constant")
    viol = []
    for x, y in _pairs(dim, samples, seed):
        d = F(x) - F(y)
        viol.append(_scaled(F.cocoercivity * (d @ d), d @ (x - y)))
    return _collect(f"{F.label}: {F.cocoercivity:.6g}-cocoercive", viol, slack, samples)


def check_V_strongly_monotone(problem: ProblemInstance, eps: float, beta: float, samples: int = 100,
                              seed: int = 0, slack: float = 1e-12) -> ContractCheck:
    viol = []
    for x, y in _pairs(problem.dim, samples, seed):
        h = x - y
        viol.append(_scaled(eps * (h @ h), (eval_V(problem, eps, beta, x) - eval_V(problem, eps, beta, y)) @ h))
    return _collect(f"V(eps={eps:g}, beta={beta:g}): eps-strongly monotone", viol, slack, samples)


def check_V_lipschitz(problem: ProblemInstance, eps: float, beta: float, samples: int = 100,
                      seed: int = 0, slack: float = 1e-12) -> ContractCheck:
    L = lipschitz_modulus(problem.eta, problem.mu, eps, beta)
    viol = []
    for x, y in _pairs(problem.dim, samples, seed):
        dv = eval_V(problem, eps, beta, x) - eval_V(problem, eps, beta, y)
        viol.append(_scaled(np.linalg.norm(dv), L * np.linalg.norm(x - y)))
    return _collect(f"V(eps={eps:g}, beta={beta:g}): Lipschitz <= L", viol, slack, samples)


def check_problem(problem: ProblemInstance, samples: int = 100, seed: int = 0, slack: float = 1e-12,
                  params: Sequence[tuple] = ((0.5, 2.0), (1e-2, 10.0), (1.0, 0.0))) -> list:
    """Run the whole sampled contract suite on a problem instance."""
    n = problem.dim
    out = [
        check_firmly_nonexpansive(problem.A, n, samples, seed, slack),
        check_monotone(problem.D, n, samples, seed, slack),
        check_lipschitz(problem.D, n, samples, seed, slack),
        check_monotone(problem.B, n, samples, seed, slack),
        check_lipschitz(problem.B, n, samples, seed, slack),
        check_cocoercive(problem.B, n, samples, seed, slack),
    ]
    for eps, beta in params:
        out.append(check_V_strongly_monotone(problem, eps, beta, samples, seed, slack))
        out.append(check_V_lipschitz(problem, eps, beta, samples, seed, slack))
    return out
