import json

import pytest

from jlbound.cli import main


def run(argv, capsys):
    rc = main(argv)
    return rc, capsys.readouterr()


def test_pipeline(tmp_path, capsys):
    inst, emb, bits, sup = (str(tmp_path / f) for f in ("i.json", "y.json", "s.bin", "sup.json"))
    assert main(["gen-instance", "--d", "3", "--k", "1", "--Q", "4", "--seed", "2", "--out", inst]) == 0
    assert main(["embed", "--kind", "isometry", "--in", inst, "--out", emb]) == 0
    # eps_net 0.2 at d=3 is outside the guaranteed budget
    assert main(["encode", "--instance", inst, "--embedding", emb, "--eps-net", "0.2", "--out", bits]) == 2
    assert main(["encode", "--instance", inst, "--embedding", emb, "--eps-net", "0.2",
                 "--allow-infeasible", "--out", bits]) == 0
    assert main(["decode", "--in", bits, "--out", sup]) == 0
    assert main(["verify", "--instance", inst, "--supports", sup]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["supports_match"] is True


def test_verify_guarantee_failure(tmp_path, capsys):
    x, y = tmp_path / "x.json", tmp_path / "y.json"
    x.write_text(json.dumps({"dim": 1, "points": [[0.0], [1.0]]}))
    y.write_text(json.dumps({"dim": 1, "points": [[0.0], [2.0]]}))
    rc, cap = run(["verify", "--x", str(x), "--y", str(y), "--eps", "0.1"], capsys)
    assert rc == 1 and json.loads(cap.out)["passed"] is False


def test_welch(capsys):
    rc, cap = run(["welch", "--n", "4", "--m", "2"], capsys)
    assert rc == 0
    assert json.loads(cap.out)["welch_bound"] == pytest.approx(3 ** -0.5, abs=1e-12)


def test_djl_estimate(capsys):
    rc, cap = run(["djl-estimate", "--eps", "0.5", "--d", "4", "--m", "2000", "--trials", "50"], capsys)
    assert rc == 0 and json.loads(cap.out)["delta_hat"] == 0.0


def test_net_audit(capsys):
    rc, cap = run(["net-audit", "--body", "l2", "--dim", "2", "--eps", "0.5", "--samples", "1000"], capsys)
    assert rc == 0 and json.loads(cap.out)["covering_ok"]
    rc, _ = run(["net-audit", "--body", "slice", "--dim", "2", "--eps", "0.5"], capsys)
    assert rc == 2


def test_report(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"mode": "counting", "parameters": {"d": 8, "k": 2, "Q": 3}}))
    rc, cap = run(["report", "--config", str(cfg)], capsys)
    assert rc == 0 and json.loads(cap.out)["results"]["family_size"] == "21952"
    cfg.write_text(json.dumps({"mode": "counting", "parameters": {"d": -1, "k": 2, "Q": 3}}))
    rc, cap = run(["report", "--config", str(cfg)], capsys)
    assert rc == 2 and "d must be" in cap.err


def test_usage_errors(capsys):
    assert run(["nonsense"], capsys)[0] == 2
    assert run(["gen-instance", "--n", "4", "--eps", "0.4"], capsys)[0] == 2
    assert run(["decode", "--in", "/nonexistent/file"], capsys)[0] == 2
