import json
import math

import pytest

from slzeta import cli
from slzeta.errors import NumericalDegeneracyError

DIRICHLET = """\
problem:
  interval: [0, 1]
bc: dirichlet
tasks: [zeta, trace, determinant]
n_max: 4
"""


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def _report(tmp_path, text, verb="compute", extra=()):
    cfg = _write(tmp_path, "job.yaml", text)
    out = tmp_path / "out.json"
    code = cli.main([verb, "--config", cfg, "--out", str(out), "-q", *extra])
    return code, json.loads(out.read_text())


def test_dirichlet_values(tmp_path):
    code, rep = _report(tmp_path, DIRICHLET)
    assert code == 0 and rep["status"] == "ok"
    z = rep["results"]["zeta"]
    assert z["1"] == pytest.approx(1 / 6, rel=1e-10)
    assert z["2"] == pytest.approx(1 / 90, rel=1e-10)
    assert z["3"] == pytest.approx(1 / 945, rel=1e-10)
    assert rep["results"]["trace"] == pytest.approx(1 / 6, rel=1e-10)
    assert rep["schema_version"] == 1


def test_determinant_of_free_dirichlet(tmp_path):
    code, rep = _report(tmp_path, DIRICHLET.replace("[0, 1]", "[0, 3]"))
    d = rep["results"]["determinant"]
    assert code == 0
    assert d["determinant"] == pytest.approx(6.0, rel=1e-8)
    assert d["n_neg"] == 0
    assert d["zeta_prime_0"]["imag"] == 0


def test_krein_crosscheck(tmp_path):
    text = "problem:\n  interval: [0, 1]\nbc: krein-von-neumann\nn_max: 3\neig_count: 60\n"
    code, rep = _report(tmp_path, text, verb="crosscheck")
    assert code == 0
    assert rep["results"]["series"]["m0"] == 2
    assert rep["results"]["zeta"]["1"] == pytest.approx(1 / 15, rel=1e-9)
    assert all(row["agree"] for row in rep["results"]["crosscheck"])


def test_schema_error_reports_line(tmp_path, capsys):
    text = "problem:\n  interval: [0, 1]\n  q: {kind: polynomal, coefficients: [0, 1]}\nbc: dirichlet\n"
    code, rep = _report(tmp_path, text)
    assert code == 1
    assert "line 3" in rep["status"] and "problem.q" in rep["status"]
    assert "line 3" in capsys.readouterr().err


@pytest.mark.parametrize("text", [
    "problem:\n  interval: [1, 0]\nbc: dirichlet\n",
    "problem:\n  interval: [0, 1]\nbc: dirichlet\nn_max: 0\n",
    "problem:\n  interval: [0, 1]\nbc: {type: separated, alpha: 0}\n",
    "problem:\n  interval: [0, 1]\nbc: dirichlet\ntasks: [fly]\n",
    "- just\n- a list\n",
])
def test_malformed_configs(tmp_path, text):
    code, _ = _report(tmp_path, text)
    assert code == 1


def test_negative_weight_is_a_validation_failure(tmp_path):
    code, rep = _report(tmp_path, "problem:\n  interval: [0, 1]\n  r: -1\nbc: dirichlet\n")
    assert code == 2
    assert rep["status"].startswith("validation failed")


def test_determinant_needs_smooth_coefficients(tmp_path):
    text = DIRICHLET.replace(
        "bc:", "  p: {kind: piecewise_constant, breakpoints: [0.5], values: [1, 2]}\nbc:")
    code, rep = _report(tmp_path, text)
    assert code == 2
    # the series part still works without the Liouville hypotheses
    code, _ = _report(tmp_path, text.replace("determinant", "zeta"))
    assert code == 0


def test_degeneracy_exit_code(tmp_path, monkeypatch):
    def boom(*args, **kwargs):
        raise NumericalDegeneracyError("forced")
    monkeypatch.setattr(cli.zeta, "zeta_integers", boom)
    code, rep = _report(tmp_path, DIRICHLET)
    assert code == 3 and "forced" in rep["status"]


def test_crosscheck_disagreement_exit_code(tmp_path, monkeypatch):
    real = cli.zeta.zeta_integers

    def shifted(cs, n_max):
        res = real(cs, n_max)
        res.values[1] += 1e-3
        return res
    monkeypatch.setattr(cli.zeta, "zeta_integers", shifted)
    code, rep = _report(tmp_path, DIRICHLET, verb="crosscheck")
    assert code == 4
    assert not rep["results"]["crosscheck"][0]["agree"]


def test_reports_are_deterministic(tmp_path):
    cfg = _write(tmp_path, "job.yaml", DIRICHLET)
    outs = []
    for k in range(2):
        out = tmp_path / f"r{k}.json"
        cli.main(["compute", "--config", cfg, "--out", str(out), "-q"])
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_batch_mode(tmp_path):
    good = _write(tmp_path, "good.yaml", DIRICHLET)
    bad = _write(tmp_path, "bad.yaml", "problem: {interval: [0, 1], r: -1}\nbc: dirichlet\n")
    outdir = tmp_path / "reports"
    code = cli.main(["compute", "--config", good, "--config", bad, "--out", str(outdir), "-q"])
    assert code == 2
    assert json.loads((outdir / "good.json").read_text())["status"] == "ok"
    assert json.loads((outdir / "bad.json").read_text())["status"].startswith("validation")


def test_validate_verb_and_flags(tmp_path, capsys):
    cfg = _write(tmp_path, "job.yaml", DIRICHLET)
    assert cli.main(["validate", "--config", cfg]) == 0
    assert "validation: basic ok, liouville ok" in capsys.readouterr().out
    code, rep = _report(tmp_path, DIRICHLET, extra=("--n-max", "2"))
    assert sorted(rep["results"]["zeta"]) == ["1", "2"]


def test_eigs_verb(tmp_path):
    code, rep = _report(tmp_path, DIRICHLET, verb="eigs", extra=("--eig-count", "5"))
    assert code == 0
    vals = rep["results"]["eigenvalues"]["values"]
    assert vals == pytest.approx([(k * math.pi) ** 2 for k in range(1, 6)], rel=1e-10)
