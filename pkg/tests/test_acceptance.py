"""Acceptance criteria, one test each.

Every test prints a single ``criterion N: PASS|FAIL ...`` line (visible with
``pytest -s``) and then asserts at the stated tolerance.
"""

import csv
import json
import math
import time
from importlib import resources

import numpy as np
import pytest

from penaltyflow import cli
from penaltyflow.dynamics import field_lipschitz_probe, tseng_field
from penaltyflow.integrator import IntegratorConfig, integrate
from penaltyflow.operators import check_problem
from penaltyflow.oracle import (
    least_norm_solution,
    random_parameter_pairs,
    solve_auxiliary,
    verify_feasibility_decay,
    verify_solution_map_lipschitz,
)
from penaltyflow.problems import SaddleSpec, make_interval_toy, make_linear_toy, make_problem, make_saddle_point
from penaltyflow.schedules import power_law_schedule, theorem_quantities

SHIPPED = ["gnep", "interval-toy", "paper-figure1-like", "saddle"]


def report(n, ok, detail):
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail}")
    return ok


def shipped_problems():
    out = {}
    for name in SHIPPED:
        cfg = json.loads((resources.files("penaltyflow") / "configs" / f"{name}.json").read_text("utf-8"))
        out[name] = make_problem(cfg["problem"])
    out["linear"] = make_linear_toy()
    return out


def test_criterion_01_closed_form_agreement():
    P = make_interval_toy(1.0, 2.0)
    start = time.perf_counter()
    worst = 0.0
    for eps in np.geomspace(1e-3, 1e-1, 5):
        for beta in np.geomspace(1.0, 1e2, 5):
            x = solve_auxiliary(P, eps, beta).x_bar[0]
            worst = max(worst, abs(x - beta / (eps + beta)))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-8 and elapsed < 1.0
    assert report(1, ok, f"max error {worst:.2e} (<= 1e-8), {elapsed:.3f} s (< 1 s)")


def test_criterion_02_least_norm_and_feasibility_decay():
    errs = []
    for box, target in (((1.0, 2.0), 1.0), ((-2.0, -1.0), -1.0), ((-1.0, 1.0), 0.0)):
        errs.append(abs(least_norm_solution(make_interval_toy(*box), tol=1e-8)[0] - target))
    decay = verify_feasibility_decay(make_interval_toy(1.0, 2.0), rho=0.5, n_max=20)
    gaps = [r.norm_B_xbar for r in decay.rows]
    monotone = all(b < a for a, b in zip(gaps, gaps[1:]))
    ok = max(errs) <= 1e-6 and monotone and gaps[-1] < 1e-6
    assert report(2, ok, f"least-norm errors {[f'{e:.1e}' for e in errs]}, gap decreasing={monotone}, "
                         f"final gap {gaps[-1]:.2e}")


def test_criterion_03_solution_map_bound():
    start = time.perf_counter()
    problems = {"interval": make_interval_toy(1.0, 2.0),
                "saddle": make_saddle_point(SaddleSpec(n1=5, n2=5, d=3, seed=0))}
    margins = {}
    for k, (name, P) in enumerate(problems.items()):
        rep = verify_solution_map_lipschitz(P, random_parameter_pairs(20, seed=k))
        assert len(rep.rows) == 20
        margins[name] = rep.min_margin
    elapsed = time.perf_counter() - start
    ok = min(margins.values()) >= -1e-6 and elapsed < 10.0
    assert report(3, ok, f"min margins {margins}, {elapsed:.2f} s (< 10 s)")


def test_criterion_04_trajectory_convergence():
    P = make_interval_toy(1.0, 2.0)
    s = power_law_schedule(1.0, 0.1, 0.1, 0.5, P.eta, P.mu)
    start = time.perf_counter()
    tr = integrate(P, s, IntegratorConfig("rk4", t_end=200.0, step=0.01, record_stride=100,
                                          initial_point=(0.0,)))
    elapsed = time.perf_counter() - start
    fin = tr.final
    dist = abs(tr.x[-1, 0] - 1.0)
    checks = {"residual_fp < 1e-3": fin["residual_fp"] < 1e-3,
              "feasibility_gap < 1e-2": fin["feasibility_gap"] < 1e-2,
              "|x - 1| < 1e-2": dist < 1e-2,
              "runtime < 5 s": elapsed < 5.0}
    ok = all(checks.values())
    failed = [k for k, v in checks.items() if not v]
    assert report(4, ok, f"residual {fin['residual_fp']:.2e}, gap {fin['feasibility_gap']:.3f}, "
                         f"|x - 1| {dist:.3f}, {elapsed:.2f} s; failed: {failed or 'none'}")


def test_criterion_05_field_lipschitz_bound():
    problems = shipped_problems()
    worst = -math.inf
    for name in ("interval-toy", "saddle", "gnep"):
        P = problems[name]
        s = power_law_schedule(1.0, 0.1, 0.1, 0.5, P.eta, P.mu)
        for t in (0.0, 1.0, 10.0, 100.0):
            probe = field_lipschitz_probe(P, s, t, samples=200, seed=0)
            worst = max(worst, probe - theorem_quantities(s, P.eta, P.mu, t).kappa)
    ok = worst <= 1e-10
    assert report(5, ok, f"max(probe - kappa) = {worst:.3e} over 3 kinds x 4 times x 200 pairs")


def test_criterion_06_descent_and_strong_monotonicity():
    problems = shipped_problems()
    worst_descent = worst_mono = -math.inf
    for k, name in enumerate(("interval-toy", "saddle", "gnep", "linear")):
        P = problems[name]
        s = power_law_schedule(1.0, 0.1, 0.1, 0.5, P.eta, P.mu)
        rng = np.random.default_rng(100 + k)
        for i in range(50):
            t = float(rng.choice([0.0, 1.0, 10.0, 100.0]))
            x = float(rng.choice([1.0, 10.0, 100.0])) * rng.standard_normal(P.dim)
            ev = tseng_field(P, s, t, x)
            xbar = solve_auxiliary(P, ev.eps, ev.beta, tol=1e-10).x_bar
            L = theorem_quantities(s, P.eta, P.mu, t).L
            lhs = (x - xbar) @ ev.xdot
            rhs = ((ev.lam * L - 1) * np.sum((x - ev.p) ** 2)
                   - ev.lam * ev.eps * np.sum((ev.p - xbar) ** 2) + 1e-8)
            worst_descent = max(worst_descent, lhs - rhs)
            mono = ev.eps * np.sum((ev.p - xbar) ** 2) - (-ev.xdot / ev.lam) @ (ev.p - xbar) - 1e-8
            worst_mono = max(worst_mono, mono)
    ok = worst_descent <= 0 and worst_mono <= 0
    assert report(6, ok, f"worst descent excess {worst_descent:.3e}, "
                         f"worst monotonicity excess {worst_mono:.3e} (both <= 0)")


def test_criterion_07_schedule_region(tmp_path, capsys):
    path = tmp_path / "sweep.json"
    path.write_text(json.dumps({"problem": {"kind": "interval"}, "schedule": {},
                                "sweep": {"q_max": 0.5, "r_max": 0.5, "n": 100}}), encoding="utf-8")
    code = cli.cmd_sweep(cli.load_config(str(path)), tmp_path)
    capsys.readouterr()
    with open(tmp_path / "region.csv", encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))[1:]
    mismatches, feasible, bad_02 = 0, 0, 0
    for idx, row in enumerate(rows):
        i, j = idx // 100 + 1, idx % 100 + 1  # q = i/200, r = j/200
        expect = [2 * i + j < 100, 2 * j + 3 * i < 200, 3 * (2 * i + j) <= 200]
        expect.append(all(expect))
        got = [v == "true" for v in row[2:]]
        mismatches += got != expect
        feasible += got[-1]
        if row[0] == "0.2" and got[-1]:
            bad_02 += 1
    lookup = {(r[0], r[1]): r[-1] for r in rows}
    ok = (code == 0 and len(rows) == 10000 and mismatches == 0 and feasible > 0 and bad_02 == 0
          and lookup[("0.1", "0.1")] == "true")
    assert report(7, ok, f"{mismatches} mismatches of 10000, {feasible} feasible, "
                         f"(0.1,0.1)={lookup[('0.1', '0.1')]}, feasible rows at q=0.2: {bad_02}")


def _order(P, s, method, h, ref):
    def run(step):
        cfg = IntegratorConfig(method, t_end=1.0, step=step, record_stride=10**9, initial_point=(1.0,))
        return integrate(P, s, cfg).x[-1]

    return math.log2(np.linalg.norm(run(h) - ref) / np.linalg.norm(run(h / 2) - ref))


def test_criterion_08_integrator_order():
    P = make_linear_toy()
    s = power_law_schedule(1.0, 0.1, 0.1, 0.5, P.eta, P.mu)
    ref = integrate(P, s, IntegratorConfig("rk4", t_end=1.0, step=1e-5, record_stride=10**9,
                                           initial_point=(1.0,))).x[-1]
    rk4 = _order(P, s, "rk4", 0.1, ref)
    euler = _order(P, s, "euler", 0.01, ref)
    ok = rk4 >= 3.5 and euler >= 0.8
    assert report(8, ok, f"observed order rk4 {rk4:.3f} (>= 3.5), euler {euler:.3f} (>= 0.8)")


@pytest.mark.parametrize("preset", SHIPPED)
def test_criterion_09_determinism(preset, tmp_path, capsys):
    codes = [cli.main(["run", "--config", preset, "--out", str(tmp_path / d)]) for d in ("a", "b")]
    capsys.readouterr()
    a = (tmp_path / "a" / "trajectory.csv").read_bytes()
    b = (tmp_path / "b" / "trajectory.csv").read_bytes()
    ok = codes == [0, 0] and a == b
    assert report(9, ok, f"{preset}: exit codes {codes}, identical trajectory.csv={a == b} ({len(a)} bytes)")


def test_criterion_10_operator_contracts():
    failures, total = [], 0
    for name, P in shipped_problems().items():
        for c in check_problem(P, samples=100, seed=0, slack=1e-12):
            total += 1
            if not c.passed:
                failures.append(f"{name}: {c.name} ({c.worst:.2e})")
    ok = not failures
    assert report(10, ok, f"{total - len(failures)}/{total} sampled contract checks pass; {failures or ''}")
