import csv
import json

import numpy as np
import pytest

from inertia_lab import diagnostics as D
from inertia_lab.errors import ConfigurationError, HypothesisError, NumericFailure
from inertia_lab.harness import builtin_scenarios, config_from_dict, parse_config, run_scenario, run_suite
from inertia_lab.harness import runner

MINIMAL_TOML = """
name = "minimal"
x0 = [1.0, 0.0]
v0 = [0.0, 0.0]
t_end = 1e4
tags = ["T1"]

[damping]
c = 1.0
alpha = 0.5

[potential]
kind = "Quadratic"
A = [[1.0, 0.0], [0.0, 1.0]]
b = [0.0, 0.0]

[source]
kind = "Zero"
"""


def doc(**changes):
    base = {
        "name": "demo",
        "damping": {"c": 1.0, "alpha": 0.5},
        "potential": {"kind": "Quadratic", "A": [[1.0, 0.0], [0.0, 1.0]], "b": [0.0, 0.0]},
        "source": {"kind": "Zero"},
        "x0": [1.0, 0.0],
        "v0": [0.0, 0.0],
        "t_end": 1e4,
        "tags": ["T1"],
    }
    base.update(changes)
    return base


def test_parse_minimal_toml_and_json():
    a = parse_config(MINIMAL_TOML)
    b = parse_config("  " + json.dumps(doc(name="minimal")))
    assert a.name == b.name == "minimal"
    assert a.damping == b.damping and [str(t) for t in a.tags] == ["T1"]
    assert np.array_equal(a.x0, b.x0)


def test_alpha_one_rejected():
    with pytest.raises(HypothesisError, match=r"\[0, 1\)"):
        parse_config(MINIMAL_TOML.replace("alpha = 0.5", "alpha = 1.0"))


def test_t4_requires_even_potential():
    bad = doc(tags=["T4"], potential={"kind": "Quadratic", "A": [[1, 0], [0, 1]], "b": [1.0, 0.0]})
    with pytest.raises(HypothesisError, match="not even"):
        config_from_dict(bad)


@pytest.mark.parametrize(
    "changes, match",
    [
        ({"potential": {"kind": "Banana"}}, "potential.kind"),
        ({"source": {"kind": "Wind"}}, "source.kind"),
        ({"tags": ["T5"]}, "tags"),
        ({"x0": [1.0]}, "x0 and v0"),
        ({"t_end": -1}, "t_end"),
        ({"solver": {"order": 8}}, "solver"),
        ({"extra": 1}, "unknown top-level"),
        ({"name": "has space"}, "name"),
    ],
)
def test_config_errors_name_the_field(changes, match):
    with pytest.raises(ConfigurationError, match=match):
        config_from_dict(doc(**changes))


def test_hypotheses_checked_at_load():
    forced = {"kind": "PowerDecay", "direction": [1, 0], "amplitude": 1.0, "beta": 1.5}
    with pytest.raises(HypothesisError, match="weighted integrability"):
        config_from_dict(doc(source=forced))  # beta - alpha - 1 = 0
    with pytest.raises(HypothesisError, match="nu must lie"):
        config_from_dict(doc(tags=["T2(0.9)"]))
    with pytest.raises(HypothesisError, match="interior"):
        config_from_dict(doc(tags=["T3"]))
    # exploratory scenarios skip validation
    cfg = config_from_dict(doc(source=forced, tags=["EXPLORATORY", "T1"]))
    assert cfg.exploratory


def test_malformed_documents():
    with pytest.raises(ConfigurationError, match="TOML"):
        parse_config("name = ")
    with pytest.raises(ConfigurationError, match="JSON"):
        parse_config("{not json")


def test_builtin_suites():
    theorems = builtin_scenarios("theorems")
    assert len(theorems) == 4
    assert {str(t) for c in theorems for t in c.tags} == {"T1", "T2(0.75)", "T3", "T4"}
    oracles = builtin_scenarios("oracles")
    assert any(c.damping.alpha == 0 and c.damping.c == 3 and c.potential.kind == "Quadratic" for c in oracles)
    boundary = builtin_scenarios("boundary")
    assert all(c.exploratory for c in boundary)
    assert any(c.source.beta == pytest.approx(c.velocity_nu + 1.0) for c in boundary)
    with pytest.raises(ConfigurationError):
        builtin_scenarios("nope")


def test_theorem_suite_verdicts(theorem_runs):
    for name, run in theorem_runs.items():
        rep = run.report
        assert rep.status == "ok"
        cfg = next(c for c in builtin_scenarios("theorems") if c.name == name)
        assert [v.tag for v in rep.verdicts] == [str(t) for t in cfg.tags]
        assert all(v.status == D.PASS for v in rep.verdicts), name
        assert all(c.status == D.PASS for v in rep.verdicts for c in v.checks)


def test_pure_friction_fit_flagged(oracle_runs):
    rep = oracle_runs["oracle_pure_friction"].report
    fit = next(f for f in rep.exponent_fits if f.field == "W")
    assert not fit.power_law and fit.exponent < -5


def test_short_horizon_not_applicable(tmp_path):
    cfg = config_from_dict(doc(t_end=10.0))
    rep = run_scenario(cfg, tmp_path).report
    t1 = rep.verdict("T1")
    env = next(c for c in t1.checks if c.name.startswith("envelope"))
    assert env.status == D.NA and t1.status == D.NA


def test_outputs(tmp_path):
    cfg = builtin_scenarios("oracles")[0]
    run_scenario(cfg, tmp_path)
    with open(tmp_path / f"{cfg.name}.trace.csv") as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == D.TRACE_COLUMNS
    assert len(rows) - 1 == len(cfg.settings().checkpoint_grid())
    assert float(rows[-1][0]) == cfg.t_end
    report = json.loads((tmp_path / f"{cfg.name}.report.json").read_text())
    assert report["scenario"] == cfg.name and report["verdicts"][0]["status"] == "pass"
    assert not list(tmp_path.glob(".*.tmp"))


def test_aborted_run(tmp_path, monkeypatch):
    def boom(*args, **kwargs):
        from inertia_lab.integrate import State

        exc = NumericFailure("synthetic failure", State(3.5, np.zeros(2), np.zeros(2)))
        exc.samples = []
        raise exc

    monkeypatch.setattr(runner, "integrate", boom)
    rep = run_scenario(config_from_dict(doc(t_end=100.0)), tmp_path).report
    assert rep.status == "aborted" and rep.last_t == 3.5 and rep.failed
    assert [v.tag for v in rep.verdicts] == ["T1"]
    assert (tmp_path / "demo.report.json").exists()


def _write(path, data):
    path.write_text(json.dumps(data))
    return path


def test_suite_partial_failure(tmp_path):
    cfg_dir = tmp_path / "cfgs"
    cfg_dir.mkdir()
    _write(cfg_dir / "good.json", doc(name="good", t_end=10.0))
    (cfg_dir / "broken.toml").write_text("name = 'broken'\n[damping]\nc = 'x'")
    result = run_suite([str(cfg_dir)], out_dir=tmp_path / "out")
    names = [e.name for e in result.entries]
    assert names == sorted(names) == ["broken", "good"]
    assert result.entries[0].status == "errored" and result.entries[1].status == "ok"
    assert result.exit_code == 1
    summary = json.loads((tmp_path / "out" / "suite.summary.json").read_text())
    assert summary["exit_code"] == 1 and summary["counts"]["errored"] == 1


def test_empty_suite(tmp_path):
    empty = tmp_path / "empty"
    empty.mkdir()
    result = run_suite([str(empty)], out_dir=tmp_path / "out")
    assert result.exit_code == 0 and result.warnings


def test_failing_verdict_sets_exit(tmp_path):
    # a T4 config whose tail cannot settle by t_end: hypothesis holds, prediction not yet visible
    bad = doc(
        name="slow",
        potential={"kind": "EvenPower", "dim": 2, "p": 4, "scale": 1.0},
        tags=["T4"],
    )
    result = run_suite([str(_write(tmp_path / "slow.json", bad))], out_dir=tmp_path / "out")
    assert result.entries[0].verdicts == {"T4": D.FAIL}
    assert result.exit_code == 1


def test_parallel_matches_serial(tmp_path):
    a = run_suite(["oracles"], workers=1, out_dir=tmp_path / "a")
    b = run_suite(["oracles"], workers=3, out_dir=tmp_path / "b")
    assert [(e.name, e.verdicts) for e in a.entries] == [(e.name, e.verdicts) for e in b.entries]
    for e in a.entries:
        name = f"{e.name}.trace.csv"
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_duplicate_names_rejected(tmp_path):
    p = _write(tmp_path / "a.json", doc(name="same", t_end=10.0))
    q = _write(tmp_path / "b.json", doc(name="same", t_end=10.0))
    with pytest.raises(ConfigurationError, match="duplicate"):
        run_suite([str(p), str(q)], out_dir=tmp_path / "out")


def test_overrides():
    cfg = builtin_scenarios("theorems")[0].with_overrides(t_end=50.0, rel_tol=1e-10)
    assert cfg.t_end == 50.0 and cfg.settings().rel_tol == 1e-10
