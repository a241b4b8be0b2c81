"""Experiment runner.

    penaltyflow validate --config interval-toy
    penaltyflow run      --config saddle --out results/saddle
    penaltyflow oracle   --config my_experiment.json
    penaltyflow sweep    --config interval-toy

``--config`` takes a JSON file or the name of a bundled preset
(see ``penaltyflow presets``).  Exit codes: 0 success, 1 config error,
2 schedule invalid, 3 divergence, 4 oracle failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional


from .errors import ConstructionError, ContractError, DivergenceError, NumericalError
from .integrator import IntegratorConfig, Trajectory, attach_oracle_distance, integrate
from .oracle import (
    random_parameter_pairs,
    solve_auxiliary,
    verify_feasibility_decay,
    verify_solution_map_lipschitz,
)
from .problems import make_problem
from .schedules import (
    COND_BETA_RATIO,
    COND_DELTA_DIVERGES,
    COND_EPS_RATIO,
    constant_schedule,
    power_law_region_flags,
    power_law_schedule,
    tabulated_schedule,
    validate_schedule,
)

logger = logging.getLogger("penaltyflow")

EXIT_OK, EXIT_CONFIG, EXIT_SCHEDULE, EXIT_DIVERGED, EXIT_ORACLE = 0, 1, 2, 3, 4

TRAJECTORY_HEADER = ["t", "norm_x", "residual_fp", "feasibility_gap", "eps", "beta", "lambda", "dist_oracle"]
PROP1_HEADER = ["n", "eps_n", "beta_n", "norm_xbar", "norm_B_xbar"]
PROP2_HEADER = ["pair", "lhs", "rhs", "margin"]
PROP2_THRESHOLD = -1e-6


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class OracleToggles:
    attach_oracle_distance: bool = False
    verify_prop1: bool = True
    verify_prop2: bool = True
    tol: float = 1e-10
    pairs: int = 20
    seed: int = 0
    rho: float = 0.5
    n_max: int = 20
    xi_bound: Optional[float] = None


@dataclass(frozen=True)
class ExperimentConfig:
    problem: dict
    schedule: dict
    integrator: dict
    oracle: OracleToggles = OracleToggles()
    output: str = "out"
    allow_invalid_schedule: bool = False
    validation: dict = field(default_factory=lambda: {"horizon": 1e4, "grid": 400})
    sweep: dict = field(default_factory=lambda: {"q_max": 0.5, "r_max": 0.5, "n": 100})
    source: str = "<dict>"


def fmt(v) -> str:
    return f"{float(v):.17g}"


# -- config ---------------------------------------------------------------------



def _presets_dir():
    return resources.files("penaltyflow") / "configs"


def preset_names() -> list:
    return sorted(p.name[:-5] for p in _presets_dir().iterdir() if p.name.endswith(".json"))


def _read_text(ref: str) -> tuple:
    path = Path(ref)
    if path.is_file():
        return path.read_text(encoding="utf-8"), str(path)
    res = _presets_dir() / f"{ref}.json"
    if res.is_file():
        return res.read_text(encoding="utf-8"), f"preset:{ref}"
    raise ConfigError(f"{ref}: no such config file or preset (presets: {', '.join(preset_names())})")


def _section(raw: dict, key: str, where: str, required: bool = True) -> dict:
    if key not in raw:
        if required:
            raise ConfigError(f"{where}: missing section '{key}'")
        return {}
    val = raw[key]
    if not isinstance(val, dict):
        raise ConfigError(f"{where}: section '{key}' must be an object")
    return val


def load_config(ref: str) -> ExperimentConfig:
    text, where = _read_text(ref)
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{where}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    return config_from_dict(raw, where)


def config_from_dict(raw: dict, where: str = "<dict>") -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError(f"{where}: top level must be an object")
    known = {"problem", "schedule", "integrator", "oracle", "output", "allow_invalid_schedule",
             "validation", "sweep", "description"}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    problem = _section(raw, "problem", where)
    if "kind" not in problem:
        raise ConfigError(f"{where}: problem.kind is required")
    schedule = _section(raw, "schedule", where)
    if schedule.get("kind", "power_law") not in ("power_law", "constant", "table"):
        raise ConfigError(f"{where}: schedule.kind must be power_law, constant or table")
    oracle_raw = _section(raw, "oracle", where, required=False)
    try:
        oracle = OracleToggles(**oracle_raw)
    except TypeError as exc:
        raise ConfigError(f"{where}: oracle: {exc}") from None
    allow = raw.get("allow_invalid_schedule", False)
    if not isinstance(allow, bool):
        raise ConfigError(f"{where}: allow_invalid_schedule must be true or false")
    return ExperimentConfig(
        problem=problem,
        schedule=schedule,
        integrator=_section(raw, "integrator", where, required=False),
        oracle=oracle,
        output=str(raw.get("output", "out")),
        allow_invalid_schedule=allow,
        validation={"horizon": 1e4, "grid": 400, **_section(raw, "validation", where, required=False)},
        sweep={"q_max": 0.5, "r_max": 0.5, "n": 100, **_section(raw, "sweep", where, required=False)},
        source=where,
    )


def build_problem(cfg: ExperimentConfig, seed: Optional[int] = None):
    try:
        return make_problem(cfg.problem, seed=seed)
    except (TypeError, ConstructionError, ContractError) as exc:
        raise ConfigError(f"{cfg.source}: problem: {exc}") from None


def build_schedule(cfg: ExperimentConfig, problem):
    s = dict(cfg.schedule)
    kind = s.pop("kind", "power_law")
    try:
        if kind == "power_law":
            return power_law_schedule(s.get("b", 1.0), s.get("q", 0.1), s.get("r", 0.1), s.get("sigma", 0.5),
                                      problem.eta, problem.mu)
        if kind == "constant":
            return constant_schedule(s.get("eps", 1.0), s.get("beta", 1.0), s.get("sigma", 0.5),
                                     problem.eta, problem.mu)
        return tabulated_schedule(s["times"], s["eps"], s["beta"], s.get("sigma", 0.5), problem.eta, problem.mu)
    except (KeyError, TypeError, ConstructionError) as exc:
        raise ConfigError(f"{cfg.source}: schedule: {exc}") from None


def build_integrator(cfg: ExperimentConfig, problem) -> IntegratorConfig:
    s = dict(cfg.integrator)
    x0 = s.pop("initial_point", None)
    if x0 is None:
        x0 = [0.0] * problem.dim
    elif isinstance(x0, (int, float)):
        x0 = [float(x0)] * problem.dim
    if len(x0) != problem.dim:
        raise ConfigError(f"{cfg.source}: integrator.initial_point has length {len(x0)}, "
                          f"problem dimension is {problem.dim}")
    try:
        return IntegratorConfig(initial_point=tuple(x0), **s)
    except (TypeError, ContractError) as exc:
        raise ConfigError(f"{cfg.source}: integrator: {exc}") from None


# -- file writers -------------------------------------------------------------

def write_csv(path: Path, header: list, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def trajectory_rows(tr: Trajectory):
    norm_x = tr.norm_x
    for i in range(len(tr)):
        dist = "" if tr.dist_oracle is None else fmt(tr.dist_oracle[i])
        yield [fmt(tr.t[i]), fmt(norm_x[i]), fmt(tr.residual_fp[i]), fmt(tr.feasibility_gap[i]),
               fmt(tr.eps[i]), fmt(tr.beta[i]), fmt(tr.lam[i]), dist]


def write_trajectory_csv(path: Path, tr: Trajectory) -> None:
    write_csv(path, TRAJECTORY_HEADER, trajectory_rows(tr))


# -- commands -------------------------------------------------------------------

def _prepare(cfg: ExperimentConfig, out: Path, seed: Optional[int]):
    problem = build_problem(cfg, seed)
    schedule = build_schedule(cfg, problem)
    out.mkdir(parents=True, exist_ok=True)
    return problem, schedule


def cmd_validate(cfg: ExperimentConfig, out: Path, seed: Optional[int] = None, allow_invalid: bool = False,
                 stream=None) -> int:
    stream = sys.stdout if stream is None else stream
    problem, schedule = _prepare(cfg, out, seed)
    report = validate_schedule(schedule, problem.eta, problem.mu,
                               float(cfg.validation["horizon"]), int(cfg.validation["grid"]))
    text = report.to_text()
    code = EXIT_OK
    if not report.passed:
        if allow_invalid or cfg.allow_invalid_schedule:
            text += "warning: schedule validation failed; continuing because allow_invalid_schedule is set\n"
        else:
            code = EXIT_SCHEDULE
    (out / "validation.txt").write_text(text, encoding="utf-8")
    stream.write(text)
    return code


def oracle_path(problem, tr: Trajectory, tol: float) -> list:
    sols, x = [], None
    for e, b in zip(tr.eps, tr.beta):
        sol = solve_auxiliary(problem, float(e), float(b), tol=tol, x0=x)
        sols.append(sol)
        x = sol.x_bar
    return sols


def cmd_run(cfg: ExperimentConfig, out: Path, seed: Optional[int] = None, allow_invalid: bool = False,
            stream=None) -> int:
    stream = sys.stdout if stream is None else stream
    code = cmd_validate(cfg, out, seed, allow_invalid, stream)
    if code != EXIT_OK:
        return code
    problem, schedule = _prepare(cfg, out, seed)
    icfg = build_integrator(cfg, problem)
    try:
        tr = integrate(problem, schedule, icfg)
    except DivergenceError as exc:
        (out / "summary.txt").write_text(f"status: diverged\nlast_finite_t: {fmt(exc.last_finite_t)}\n"
                                         f"message: {exc}\n", encoding="utf-8")
        stream.write(f"diverged: {exc}\n")
        return EXIT_DIVERGED
    if cfg.oracle.attach_oracle_distance:
        try:
            tr = attach_oracle_distance(tr, oracle_path(problem, tr, cfg.oracle.tol))
        except NumericalError as exc:
            stream.write(f"oracle failure: {exc}\n")
            return EXIT_ORACLE
    write_trajectory_csv(out / "trajectory.csv", tr)
    fin = tr.final
    lines = [f"problem: {problem.name}", f"schedule: {schedule.kind} {cfg.schedule}",
             f"integrator: {icfg.method} step={icfg.step:g} t_end={icfg.t_end:g}", "status: ok",
             f"final_t: {fmt(fin['t'])}", f"final_residual_fp: {fmt(fin['residual_fp'])}",
             f"final_feasibility_gap: {fmt(fin['feasibility_gap'])}", f"final_norm_x: {fmt(fin['norm_x'])}"]
    if "dist_oracle" in fin:
        lines.append(f"final_dist_oracle: {fmt(fin['dist_oracle'])}")
    summary = "\n".join(lines) + "\n"
    (out / "summary.txt").write_text(summary, encoding="utf-8")
    from .plotting import write_log_plot

    write_log_plot(out / "residual.svg", tr.t, tr.residual_fp, "fixed-point residual", "||x(t) - p(t)||")
    write_log_plot(out / "gap.svg", tr.t, tr.feasibility_gap, "feasibility gap", "||B(x(t))||")
    stream.write(summary)
    return EXIT_OK


def cmd_oracle(cfg: ExperimentConfig, out: Path, seed: Optional[int] = None, stream=None) -> int:
    stream = sys.stdout if stream is None else stream
    problem = build_problem(cfg, seed)
    out.mkdir(parents=True, exist_ok=True)
    o = cfg.oracle
    pair_seed = o.seed if seed is None else seed
    ok = True
    try:
        if o.verify_prop1:
            rep = verify_feasibility_decay(problem, rho=o.rho, n_max=o.n_max, xi_bound=o.xi_bound)
            write_csv(out / "prop1.csv", PROP1_HEADER,
                      ([str(r.n), fmt(r.eps), fmt(r.beta), fmt(r.norm_xbar), fmt(r.norm_B_xbar)] for r in rep.rows))
            stream.write(f"prop1: {rep.status} (monotone={rep.monotone}, decayed={rep.decayed}, "
                         f"final ||B(xbar)||={rep.rows[-1].norm_B_xbar:.3e})\n")
            ok &= rep.passed
        if o.verify_prop2:
            base = random_parameter_pairs(max(o.pairs - 1, 0), seed=pair_seed)
            first = base[0][0] if base else (1.0, 1.0)
            pairs = [(first, first)] + base
            rep2 = verify_solution_map_lipschitz(problem, pairs, tol=o.tol, seed=pair_seed)
            write_csv(out / "prop2.csv", PROP2_HEADER,
                      ([str(r.pair), fmt(r.lhs), fmt(r.rhs), fmt(r.margin)] for r in rep2.rows))
            stream.write(f"prop2: min margin {rep2.min_margin:.6g} over {len(rep2.rows)} pairs "
                         f"(ell_hat={rep2.ell_hat:.6g}, a_hat={rep2.a_hat:.6g})\n")
            ok &= rep2.min_margin >= PROP2_THRESHOLD
    except NumericalError as exc:
        stream.write(f"oracle failure: {exc}\n")
        return EXIT_ORACLE
    return EXIT_OK if ok else EXIT_ORACLE


def sweep_rows(q_max: float, r_max: float, n: int):
    names = (COND_DELTA_DIVERGES, COND_EPS_RATIO, COND_BETA_RATIO)
    for i in range(1, n + 1):
        q = i * q_max / n
        for j in range(1, n + 1):
            r = j * r_max / n
            flags = power_law_region_flags(q, r)
            yield q, r, [flags[k] for k in names], all(flags.values())


def cmd_sweep(cfg: ExperimentConfig, out: Path, stream=None) -> int:
    stream = sys.stdout if stream is None else stream
    s = cfg.sweep
    q_max, r_max, n = float(s["q_max"]), float(s["r_max"]), int(s["n"])
    if not (q_max > 0 and r_max > 0 and n >= 1):
        raise ConfigError(f"{cfg.source}: sweep bounds must be positive")
    out.mkdir(parents=True, exist_ok=True)
    header = ["q", "r", COND_DELTA_DIVERGES, COND_EPS_RATIO, COND_BETA_RATIO, "feasible"]
    rows, feasible = [], 0
    for q, r, flags, ok in sweep_rows(q_max, r_max, n):
        feasible += ok
        rows.append([repr(q), repr(r)] + [str(f).lower() for f in flags] + [str(ok).lower()])
    write_csv(out / "region.csv", header, rows)
    stream.write(f"sweep: {feasible} of {n * n} grid points feasible\n")
    return EXIT_OK


# -- entry point ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="penaltyflow", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb, help_ in (("validate", "check schedule conditions"),
                        ("run", "integrate the flow and write trajectory.csv, summary.txt and plots"),
                        ("oracle", "verify solution-path properties; writes prop1.csv and prop2.csv"),
                        ("sweep", "tabulate the feasible power-law (q, r) region; writes region.csv")):
        p = sub.add_parser(verb, help=help_)
        p.add_argument("--config", required=True, help="JSON config file or preset name")
        p.add_argument("--out", help="output directory (overrides config 'output')")
        p.add_argument("--allow-invalid-schedule", action="store_true")
        p.add_argument("--seed", type=int, help="overrides the config seeds")
        p.add_argument("-v", "--verbose", action="store_true")
    sub.add_parser("presets", help="list bundled configs")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.verb == "presets":
        print("\n".join(preset_names()))
        return EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = load_config(args.config)
        out = Path(args.out if args.out else cfg.output)
        if args.verb == "validate":
            return cmd_validate(cfg, out, args.seed, args.allow_invalid_schedule)
        if args.verb == "run":
            return cmd_run(cfg, out, args.seed, args.allow_invalid_schedule)
        if args.verb == "oracle":
            return cmd_oracle(cfg, out, args.seed)
        return cmd_sweep(cfg, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
