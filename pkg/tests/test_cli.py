import csv
import json

import pytest

from penaltyflow import cli
from penaltyflow.errors import DivergenceError, NonConvergenceError


def write_config(tmp_path, **overrides):
    cfg = {
        "problem": {"kind": "interval", "lo": 1.0, "hi": 2.0},
        "schedule": {"kind": "power_law", "b": 1.0, "q": 0.1, "r": 0.1, "sigma": 0.5},
        "integrator": {"method": "rk4", "t_end": 5.0, "step": 0.05, "record_stride": 10},
        "oracle": {"attach_oracle_distance": False},
    }
    cfg.update(overrides)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg), encoding="utf-8")
    return str(path)


def read_rows(path):
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.reader(fh))


def test_presets_are_listed(capsys):
    assert cli.main(["presets"]) == 0
    names = capsys.readouterr().out.split()
    assert names == ["gnep", "interval-toy", "paper-figure1-like", "saddle"]


def test_validate_pass(tmp_path, capsys):
    assert cli.main(["validate", "--config", "interval-toy", "--out", str(tmp_path)]) == 0
    text = (tmp_path / "validation.txt").read_text(encoding="utf-8")
    assert text == capsys.readouterr().out
    assert "PASS" in text.splitlines()[0]


def test_validate_fail_and_override(tmp_path, capsys):
    path = write_config(tmp_path, schedule={"kind": "power_law", "q": 0.2, "r": 0.05})
    assert cli.main(["validate", "--config", path, "--out", str(tmp_path / "a")]) == 2
    out = capsys.readouterr().out
    assert "[FAIL] 2q+r≤1/3" in out
    assert cli.main(["validate", "--config", path, "--out", str(tmp_path / "b"), "--allow-invalid-schedule"]) == 0
    assert capsys.readouterr().out.splitlines()[-1].startswith("warning:")


def test_run_refuses_invalid_schedule(tmp_path):
    path = write_config(tmp_path, schedule={"kind": "power_law", "q": 0.2, "r": 0.05})
    assert cli.main(["run", "--config", path, "--out", str(tmp_path / "o")]) == 2
    assert not (tmp_path / "o" / "trajectory.csv").exists()


@pytest.mark.parametrize("text,needle", [
    ("{\n  \"problem\": [1,,]\n}", ":2:"),
    ("[]", "top level"),
    ('{"schedule": {}}', "missing section 'problem'"),
    ('{"problem": {"kind": "interval"}, "schedule": {"kind": "cubic"}}', "schedule.kind"),
    ('{"problem": {"kind": "interval"}, "schedule": {}, "extra": 1}', "unknown keys"),
    ('{"problem": {"kind": "blob"}, "schedule": {}}', "problem:"),
    ('{"problem": {"kind": "interval"}, "schedule": {}, "integrator": {"initial_point": [0, 1]}}', "length 2"),
])
def test_config_errors_exit_1(tmp_path, capsys, text, needle):
    path = tmp_path / "bad.json"
    path.write_text(text, encoding="utf-8")
    assert cli.main(["run", "--config", str(path), "--out", str(tmp_path / "o")]) == 1
    err = capsys.readouterr().err
    assert "config error" in err and needle in err


def test_missing_config_exit_1(capsys):
    assert cli.main(["validate", "--config", "no-such-preset"]) == 1
    assert "no such config" in capsys.readouterr().err


def test_run_outputs(tmp_path):
    path = write_config(tmp_path)
    out = tmp_path / "o"
    assert cli.main(["run", "--config", path, "--out", str(out)]) == 0
    rows = read_rows(out / "trajectory.csv")
    assert ",".join(rows[0]) == "t,norm_x,residual_fp,feasibility_gap,eps,beta,lambda,dist_oracle"
    assert all(r[-1] == "" for r in rows[1:])
    for r in rows[1:]:
        for v in r[:-1]:
            assert float(v) == float(f"{float(v):.17g}")
            assert f"{float(v):.17g}" == v
    assert float(rows[1][0]) == 0.0 and float(rows[-1][0]) == 5.0
    summary = (out / "summary.txt").read_text(encoding="utf-8")
    assert "final_residual_fp" in summary and "final_feasibility_gap" in summary
    assert "final_dist_oracle" not in summary
    for name in ("residual.svg", "gap.svg"):
        assert (out / name).read_text(encoding="utf-8").lstrip().startswith("<?xml")


def test_run_with_oracle_distance(tmp_path):
    path = write_config(tmp_path, oracle={"attach_oracle_distance": True})
    out = tmp_path / "o"
    assert cli.main(["run", "--config", path, "--out", str(out)]) == 0
    rows = read_rows(out / "trajectory.csv")
    assert all(r[-1] != "" for r in rows[1:])
    assert "final_dist_oracle" in (out / "summary.txt").read_text(encoding="utf-8")


def test_run_is_byte_deterministic(tmp_path):
    path = write_config(tmp_path, problem={"kind": "saddle", "n1": 3, "n2": 3, "d": 2, "seed": 1},
                        oracle={"attach_oracle_distance": True})
    for d in ("a", "b"):
        assert cli.main(["run", "--config", path, "--out", str(tmp_path / d)]) == 0
    for name in ("trajectory.csv", "summary.txt", "residual.svg", "gap.svg"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_seed_override(tmp_path):
    path = write_config(tmp_path, problem={"kind": "saddle", "n1": 3, "n2": 3, "d": 2, "seed": 1})
    assert cli.main(["run", "--config", path, "--out", str(tmp_path / "a")]) == 0
    assert cli.main(["run", "--config", path, "--out", str(tmp_path / "b"), "--seed", "2"]) == 0
    a = (tmp_path / "a" / "trajectory.csv").read_bytes()
    b = (tmp_path / "b" / "trajectory.csv").read_bytes()
    assert a != b


def test_saddle_gap_positive_at_start(tmp_path):
    path = write_config(tmp_path, problem={"kind": "saddle", "n1": 5, "n2": 5, "d": 3, "seed": 0})
    assert cli.main(["run", "--config", path, "--out", str(tmp_path / "o")]) == 0
    rows = read_rows(tmp_path / "o" / "trajectory.csv")
    assert float(rows[1][3]) > 0


def test_divergence_exit_3(tmp_path, monkeypatch):
    def boom(*args, **kwargs):
        raise DivergenceError("state diverged", last_finite_t=1.25)

    monkeypatch.setattr(cli, "integrate", boom)
    out = tmp_path / "o"
    assert cli.main(["run", "--config", write_config(tmp_path), "--out", str(out)]) == 3
    assert "last_finite_t: 1.25" in (out / "summary.txt").read_text(encoding="utf-8")


def test_oracle_interval(tmp_path):
    out = tmp_path / "o"
    assert cli.main(["oracle", "--config", "interval-toy", "--out", str(out)]) == 0
    p1 = read_rows(out / "prop1.csv")
    assert p1[0] == ["n", "eps_n", "beta_n", "norm_xbar", "norm_B_xbar"]
    gaps = [float(r[4]) for r in p1[1:]]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] < 1e-6
    for r in p1[1:]:
        e, b = float(r[1]), float(r[2])
        assert float(r[4]) == pytest.approx(e / (e + b), rel=1e-8)
    p2 = read_rows(out / "prop2.csv")
    assert p2[0] == ["pair", "lhs", "rhs", "margin"]
    assert [float(v) for v in p2[1][1:]] == [0.0, 0.0, 0.0]
    assert len(p2) == 21


def test_oracle_saddle_margins(tmp_path):
    out = tmp_path / "o"
    assert cli.main(["oracle", "--config", "saddle", "--out", str(out)]) == 0
    assert all(float(r[3]) >= 0 for r in read_rows(out / "prop2.csv")[1:])


def test_oracle_failure_exit_4(tmp_path, monkeypatch):
    def fail(*args, **kwargs):
        raise NonConvergenceError("no", best_residual=1.0, iterations=5)

    monkeypatch.setattr(cli, "verify_feasibility_decay", fail)
    assert cli.main(["oracle", "--config", "interval-toy", "--out", str(tmp_path)]) == 4


def test_sweep_region(tmp_path):
    assert cli.main(["sweep", "--config", "interval-toy", "--out", str(tmp_path)]) == 0
    rows = read_rows(tmp_path / "region.csv")
    assert rows[0] == ["q", "r", "2q+r<1/2", "2r+3q<1", "2q+r≤1/3", "feasible"]
    table = {(r[0], r[1]): r[2:] for r in rows[1:]}
    assert len(table) == 10000
    assert table[("0.1", "0.1")][-1] == "true"
    assert table[("0.2", "0.05")][-1] == "false"


def test_sweep_rejects_bad_bounds(tmp_path):
    path = write_config(tmp_path, sweep={"q_max": 0.0, "r_max": 0.5, "n": 10})
    assert cli.main(["sweep", "--config", path, "--out", str(tmp_path)]) == 1
