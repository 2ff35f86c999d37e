import csv
import json

import numpy as np
import pytest

from artifact.cli_runner import (ATTEMPT_COLUMNS, LOSS_TRACE_COLUMNS, ExperimentConfig, emit_report,
                                 load_report, main, resolve_parameters, run_end_to_end)
from artifact.errors import FeasibilityError

R_W = 2.0**-8


def _cfg(**kw):
    base = dict(d=2, cap_D=2, R_w=R_W, noise="adversarial", eps=0.1, delta=0.1)
    return ExperimentConfig(**{**base, **kw})


@pytest.fixture(scope="module")
def reports():
    return [run_end_to_end(_cfg(), s) for s in range(2)]


def _write_cfg(tmp_path, **kw):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(_cfg(**kw).to_dict()))
    return str(p)


def test_config_rejects_unknown():
    with pytest.raises(ValueError):
        ExperimentConfig.from_dict({"d": 2, "bogus": 1})


def test_free_mode_needs_ack():
    cfg = ExperimentConfig(mode="free", M1=100, M2=8, R_tilde=10, tau=1e-6, R=10)
    with pytest.raises(FeasibilityError):
        resolve_parameters(cfg)
    cfg.unsafe_params = True
    four, ver, tau, R, _ = resolve_parameters(cfg)
    assert four.M1 == 100 and ver.M2 == 8 and tau == 1e-6


def test_end_to_end_success(reports):
    for r in reports:
        assert r.success and r.qsq_count <= 4 * r.n_bound
        assert r.w_error_inf <= 1e-3


def test_reports_byte_identical(tmp_path, reports):
    cfg = _cfg()
    again = [run_end_to_end(cfg, s) for s in range(2)]
    emit_report(reports, tmp_path / "a", cfg)
    emit_report(again, tmp_path / "b", cfg)
    for name in ("report.json", "loss_trace.csv", "period_attempts.csv", "queries.jsonl"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_emit_load_round_trip(tmp_path, reports):
    emit_report(reports, tmp_path, _cfg())
    master, back = load_report(tmp_path)
    assert master["success_rate"] == 1.0 and "out" not in master["config"]
    for a, b in zip(reports, back):
        assert json.loads(json.dumps(a.to_dict(), default=list)) == json.loads(json.dumps(b.to_dict()))
        assert np.allclose(np.array(a.loss_trace, float), np.array(b.loss_trace, float))
        assert len(a.query_log) == len(b.query_log) == a.qsq_count
        assert b.wall_time == pytest.approx(a.wall_time)


def test_csv_columns(tmp_path, reports):
    emit_report(reports, tmp_path)
    assert next(csv.reader(open(tmp_path / "loss_trace.csv"))) == ["trial", *LOSS_TRACE_COLUMNS]
    assert next(csv.reader(open(tmp_path / "period_attempts.csv"))) == ["trial", *ATTEMPT_COLUMNS]


def test_empty_report(tmp_path):
    emit_report([], tmp_path, _cfg())
    master, back = load_report(tmp_path)
    assert back == [] and master["trials"] == [] and master["success_rate"] is None


def test_exit_codes(tmp_path, capsys):
    assert main(["end2end", "--config", _write_cfg(tmp_path, R_w=2.0**-12)]) == 2
    assert main(["end2end", "--config", _write_cfg(tmp_path), "--max-attempts", "0"]) == 3
    p = tmp_path / "free.json"
    p.write_text(json.dumps({"mode": "free", "M1": 100, "M2": 8, "R_tilde": 10, "tau": 1e-6}))
    assert main(["discretize", "--config", str(p)]) == 2


def test_gen_and_audit(tmp_path, capsys):
    assert main(["gen", "--config", _write_cfg(tmp_path), "--seed", "4", "--out", str(tmp_path)]) == 0
    inst = json.loads((tmp_path / "instance.json").read_text())
    assert len(inst["w_star"]) == 2 and abs(sum(inst["beta_star"]) - 1) < 1e-12
    capsys.readouterr()
    p = tmp_path / "g.json"
    p.write_text(json.dumps({"d": 1, "cap_D": 1, "R_w": 1.0, "eps": 0.5,
                             "distribution": {"kind": "gaussian", "sigma": [1e9]}}))
    assert main(["audit", "--config", str(p)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert "ok" in out
