"""Test and benchmark problem instances.

* ``make_interval_toy`` -- 1-D feasibility problem with ``zer(Phi) = [lo, hi]``.
* ``make_linear_toy`` -- unconstrained ``D(x) = slope (x - target)``.
* ``make_saddle_point`` -- strongly convex-concave bilinear saddle problem with
  box constraints handled by ``A`` and a coupling polyhedron penalized by ``B``.
* ``make_gnep_linear`` -- quadratic game with a shared affine constraint.

Random data come from ``numpy.random.default_rng(seed)`` in a fixed draw
order, so every instance is regenerated bit-exactly from its seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import ConstructionError
from .operators import (
    ProblemInstance,
    SolutionInfo,
    check_monotone,
    linear_map,
    penalty_affine,
    penalty_from_box,
    penalty_zero,
    resolvent_box,
    resolvent_zero,
    zero_map,
)

__all__ = [
    "SaddleSpec",
    "make_interval_toy",
    "make_linear_toy",
    "make_saddle_point",
    "make_gnep_linear",
    "make_problem",
    "PROBLEM_KINDS",
]


def make_interval_toy(lo: float = 1.0, hi: float = 2.0) -> ProblemInstance:
    """``A = 0``, ``D = 0``, ``B = Id - P_[lo,hi]``."""
    if not lo <= hi:
        raise ConstructionError(f"need lo <= hi, got [{lo}, {hi}]")
    z = np.array([min(max(0.0, lo), hi)])
    return ProblemInstance(
        dim=1,
        A=resolvent_zero(),
        D=zero_map(1, label="D=0"),
        B=penalty_from_box(lo, hi, dim=1),
        name=f"interval[{lo:g},{hi:g}]",
        solution_info=SolutionInfo(f"zer(Phi) = [{lo:g}, {hi:g}]", least_norm=z, feasible_point=z),
        data={"lo": float(lo), "hi": float(hi)},
    )


def make_linear_toy(slope: float = 1.0, target: float = 0.0, dim: int = 1) -> ProblemInstance:
    """``D(x) = slope (x - target)`` with ``A = 0``, ``B = 0``; the unique zero is ``target``."""
    if not slope > 0:
        raise ConstructionError("slope must be positive")
    tgt = np.full(dim, float(target))
    return ProblemInstance(
        dim=dim,
        A=resolvent_zero(),
        D=linear_map(slope * np.eye(dim), -slope * tgt, label="D=s(x-c)"),
        B=penalty_zero(dim),
        name=f"linear(slope={slope:g}, target={target:g})",
        solution_info=SolutionInfo(f"zer(Phi) = {{{target:g}}}", least_norm=tgt, feasible_point=tgt),
        data={"slope": float(slope), "target": float(target)},
    )


@dataclass(frozen=True)
class SaddleSpec:
    n1: int = 10
    n2: int = 10
    d: int = 5
    g: float = 0.25
    f: float = 0.25
    box1: tuple = (-1.0, 1.0)
    box2: tuple = (-1.0, 1.0)
    seed: int = 0

    def __post_init__(self):
        if min(self.n1, self.n2, self.d) < 1:
            raise ConstructionError("saddle dimensions must be positive")
        if not (self.g > 0 and self.f > 0):
            raise ConstructionError("strong convexity weights g, f must be positive")
        for lo, hi in (self.box1, self.box2):
            if not lo < hi:
                raise ConstructionError("saddle boxes need lo < hi")


def _interior(rng, lo, hi, n):
    return lo + (hi - lo) * (0.1 + 0.8 * rng.uniform(size=n))


def make_saddle_point(spec: SaddleSpec = SaddleSpec()) -> ProblemInstance:
    """min over x1 in X1, max over x2 in X2 of
    ``<Q x1, x2> + <b, x1> - <c, x2> + g |x1|^2 - f |x2|^2`` s.t. ``T1 x1 + T2 x2 = t``.
    """
    n1, n2, d = spec.n1, spec.n2, spec.d
    rng = np.random.default_rng(spec.seed)
    Q = rng.uniform(-1.0, 1.0, (n2, n1))
    T1 = rng.uniform(-1.0, 1.0, (d, n1))
    T2 = rng.uniform(-1.0, 1.0, (d, n2))
    b = rng.uniform(-1.0, 1.0, n1)
    c = rng.uniform(-1.0, 1.0, n2)
    x_feas = np.concatenate([_interior(rng, *spec.box1, n1), _interior(rng, *spec.box2, n2)])

    M = np.block([[2.0 * spec.g * np.eye(n1), Q.T], [-Q, 2.0 * spec.f * np.eye(n2)]])
    T = np.hstack([T1, T2])
    t = T @ x_feas
    lo = np.concatenate([np.full(n1, spec.box1[0]), np.full(n2, spec.box2[0])])
    hi = np.concatenate([np.full(n1, spec.box1[1]), np.full(n2, spec.box2[1])])
    return ProblemInstance(
        dim=n1 + n2,
        A=resolvent_box(lo, hi),
        D=linear_map(M, np.concatenate([b, c]), label="D_saddle"),
        B=penalty_affine(T, t),
        name=f"saddle(n1={n1}, n2={n2}, d={d}, seed={spec.seed})",
        solution_info=SolutionInfo("zer(Phi) is a singleton (D strongly monotone)", feasible_point=x_feas),
        data={"Q": Q, "T1": T1, "T2": T2, "b": b, "c": c, "t": t, "x_feas": x_feas, "M": M,
              "spec": spec},
    )


def make_gnep_linear(num_players: int = 3, dims: Sequence[int] = (2, 2, 2), d: int = 2, seed: int = 0,
                     box: Optional[tuple] = (-1.0, 1.0), coupling: float = 1.0,
                     P: Optional[Sequence] = None, q: Optional[Sequence] = None,
                     T: Optional[Sequence] = None, rhs=None, max_resamples: int = 10) -> ProblemInstance:
    """Quadratic game ``l_i = x_i^T P_i x_i / 2 + x_i^T sum_j C_ij x_j + q_i^T x_i``.

    Player sets are boxes (through ``A``); the shared constraint
    ``sum_i T_i x_i = rhs`` is penalized through ``B``.  Any of ``P``, ``q``,
    ``T`` and ``rhs`` may be given explicitly; the rest are drawn from the
    seed.  If the pseudo-gradient's symmetric part is indefinite its
    diagonal is shifted by ``-lambda_min + 1e-6``.
    """
    dims = [int(n) for n in dims]
    if len(dims) != num_players or min(dims, default=0) < 1:
        raise ConstructionError("dims must list one positive size per player")
    n = sum(dims)
    offs = np.cumsum([0] + dims)
    rng = np.random.default_rng(seed)

    for _ in range(max_resamples):
        J = np.zeros((n, n))
        for i, ni in enumerate(dims):
            if P is None:
                G = rng.standard_normal((ni, ni))
                Pi = G @ G.T / ni
            else:
                Pi = np.asarray(P[i], dtype=float)
            J[offs[i]:offs[i + 1], offs[i]:offs[i + 1]] = Pi
            for j, nj in enumerate(dims):
                if j != i:
                    J[offs[i]:offs[i + 1], offs[j]:offs[j + 1]] = coupling * rng.uniform(-1.0, 1.0, (ni, nj))
        qv = (np.concatenate([np.asarray(v, dtype=float) for v in q]) if q is not None
              else rng.uniform(-1.0, 1.0, n))
        Tm = (np.hstack([np.asarray(Ti, dtype=float) for Ti in T]) if T is not None
              else rng.uniform(-1.0, 1.0, (d, n)))
        if box is not None:
            x_feas = _interior(rng, box[0], box[1], n)
        else:
            x_feas = rng.standard_normal(n)

        lam_min = np.linalg.eigvalsh(0.5 * (J + J.T))[0]
        shift = 0.0
        if lam_min < 0:
            shift = -lam_min + 1e-6
            J = J + shift * np.eye(n)
        D = linear_map(J, qv, label="D_gnep")
        if check_monotone(D, n, samples=100, seed=seed).passed:
            break
        if P is not None:
            raise ConstructionError("explicit player costs give a non-monotone pseudo-gradient")
    else:
        raise ConstructionError(f"no monotone pseudo-gradient after {max_resamples} resamples")

    feasible = None
    if rhs is None:
        rhs_v = Tm @ x_feas
        feasible = x_feas
    else:
        rhs_v = np.atleast_1d(np.asarray(rhs, dtype=float))
    A = resolvent_zero() if box is None else resolvent_box(box[0], box[1])
    return ProblemInstance(
        dim=n,
        A=A,
        D=D,
        B=penalty_affine(Tm, rhs_v),
        name=f"gnep(players={num_players}, dims={dims}, d={Tm.shape[0]}, seed={seed})",
        solution_info=SolutionInfo("variational equilibria of the game", feasible_point=feasible),
        data={"J": J, "q": qv, "T": Tm, "rhs": rhs_v, "x_feas": x_feas, "shift": shift, "dims": dims},
    )


PROBLEM_KINDS = ("interval", "linear", "saddle", "gnep")


def make_problem(spec: dict, seed: Optional[int] = None) -> ProblemInstance:
    """Build a problem from a config mapping ``{"kind": ..., **parameters}``."""
    spec = dict(spec)
    kind = spec.pop("kind", None)
    if seed is not None and kind in ("saddle", "gnep"):
        spec["seed"] = seed
    if kind == "interval":
        return make_interval_toy(float(spec.get("lo", 1.0)), float(spec.get("hi", 2.0)))
    if kind == "linear":
        return make_linear_toy(float(spec.get("slope", 1.0)), float(spec.get("target", 0.0)),
                               int(spec.get("dim", 1)))
    if kind == "saddle":
        for key in ("box1", "box2"):
            if key in spec:
                spec[key] = tuple(spec[key])
        return make_saddle_point(SaddleSpec(**spec))
    if kind == "gnep":
        dims = spec.pop("dims", (2, 2, 2))
        num = spec.pop("num_players", len(dims))
        if "box" in spec and spec["box"] is not None:
            spec["box"] = tuple(spec["box"])
        return make_gnep_linear(num, dims, **spec)
    raise ConstructionError(f"unknown problem kind {kind!r}; expected one of {PROBLEM_KINDS}")
