import json

import pytest

from hypertrace.cli import main


def run(tmp_path, *argv):
    out = tmp_path / "out"
    code = main([*argv, "--out", str(out)])
    return code, out


def manifest(out):
    return json.loads((out / "manifest.json").read_text())


def test_random_draws_need_a_seed(tmp_path, capsys):
    code, _ = run(tmp_path, "simulate", "--n", "3")
    assert code == 2 and "--seed" in capsys.readouterr().err


def test_entropy_records_the_seed(tmp_path):
    code, out = run(tmp_path, "simulate", "--n", "3", "-T", "2", "--entropy")
    assert code == 0 and isinstance(manifest(out)["seed"], int)


def test_simulate_then_reconstruct(tmp_path):
    code, out = run(tmp_path, "simulate", "--n", "2", "--d", "2", "-T", "300", "--q", "0.3",
                    "--seed", "5")
    assert code == 0
    m = manifest(out)
    assert m["seed"] == 5 and "truth.hmx" in m["outputs"] and "traces.csv" in m["outputs"]
    assert len(list((out / "traces").glob("*.trc"))) == 300
    code2 = main(["reconstruct", "--traces", str(out / "traces"), "--x", str(out / "truth.hmx"),
                  "--n", "2", "--d", "2", "--q", "0.3", "--out", str(tmp_path / "rec")])
    assert code2 == 0
    res = manifest(tmp_path / "rec")["result"]
    assert res["correct"] is True
    assert (tmp_path / "rec" / "estimate.hmx").read_text() == (out / "truth.hmx").read_text()


def test_simulate_is_reproducible(tmp_path):
    main(["simulate", "--n", "3", "-T", "4", "--seed", "9", "--out", str(tmp_path / "a")])
    main(["simulate", "--n", "3", "-T", "4", "--seed", "9", "--out", str(tmp_path / "b")])
    a = sorted(p.read_text() for p in (tmp_path / "a" / "traces").glob("*.trc"))
    b = sorted(p.read_text() for p in (tmp_path / "b" / "traces").glob("*.trc"))
    assert a == b


@pytest.mark.parametrize("extra", [[], ["--exact"]])
def test_identity_check(tmp_path, extra):
    code, out = run(tmp_path, "identity-check", "--n", "3", "--d", "2", "--l", "2", "--points",
                    "3", "--seed", "1", *extra)
    assert code == 0
    rows = (out / "identity.csv").read_text().splitlines()
    assert len(rows) == 4
    assert manifest(out)["result"]["max_residual"] <= 1e-9


def test_reduce_and_witness(tmp_path):
    code, out = run(tmp_path, "reduce", "--n", "5", "--d", "3", "--seed", "2")
    assert code == 0 and (out / "lambdas.csv").exists()
    assert len(manifest(out)["result"]["lambdas"]) == 3
    code, out = run(tmp_path, "witness", "--n", "4", "--d", "2", "--seed", "2")
    assert code == 0 and (out / "witness.csv").exists()


@pytest.mark.parametrize("kind", ["littlewood", "multivariate", "corollary"])
def test_bound(tmp_path, kind):
    code, out = run(tmp_path, "bound", "--kind", kind, "--m", "64", "--n", "32", "--seed", "3")
    assert code == 0
    res = manifest(out)["result"]
    assert res["meets_floor"] and res["value"] >= res["floor"]
    assert (out / "bound.csv").exists()
    if kind == "littlewood":
        assert (out / "arc_profile.png").stat().st_size > 0


def test_experiment(tmp_path):
    code, out = run(tmp_path, "experiment", "--n", "2", "--d", "2", "--q", "0.3", "--trials", "10",
                    "--schedule-stop", "64", "--seed", "4")
    assert code == 0
    res = manifest(out)["result"]
    assert res["schedule"] == [1, 2, 4, 8, 16, 32, 64]
    assert (out / "success.png").exists() and (out / "trials.csv").exists()


def test_oversized_candidate_set_is_refused(tmp_path):
    code, _ = run(tmp_path, "reconstruct", "--n", "3", "--d", "3", "-T", "2", "--seed", "1")
    assert code == 2


def test_config_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"q": 0.25}))
    code, out = run(tmp_path, "simulate", "--n", "2", "-T", "1", "--seed", "1", "--config", str(cfg))
    assert code == 0
    assert manifest(out)["result"]["q"] == 0.25
