import json
import math

import numpy as np
import pytest

from renyicp import limits
from renyicp.cli import main
from renyicp.dgp import DgpSpec, gen_errors
from renyicp.inference import change_test
from renyicp.regression import ols_residuals
from renyicp.rolling import FACTORS, load_table
from renyicp.stats import TrimSpec
from renyicp.variance import VarianceConfig


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_test_step_known_sigma(tmp_path, capsys):
    path = write(tmp_path, "s.csv", "x\n" + "0\n" * 50 + "2\n" * 50)
    code, out, _ = run(["test", path, "--column", "x", "--variance", "known=1"], capsys)
    assert code == 0
    rep = json.loads(out)
    assert rep["scaled"] == pytest.approx(4.0)
    assert rep["p_value"] < 0.001
    assert rep["p_value"] == pytest.approx(1 - limits.MAX_TWO.cdf(4.0), abs=1e-10)
    assert rep["decision"] == "reject"
    assert rep["argmax"] == 50


def test_test_constant_column(tmp_path, capsys):
    path = write(tmp_path, "c.csv", "x\n" + "1.5\n" * 40)
    code, out, _ = run(["test", path, "--column", "x"], capsys)
    assert code == 0
    rep = json.loads(out)
    assert rep["p_value"] == 1.0
    assert rep["decision"] == "fail to reject"


def test_test_csv_format(tmp_path, capsys):
    path = write(tmp_path, "s.csv", "x\n" + "\n".join(str(v) for v in np.random.default_rng(0).standard_normal(60)) + "\n")
    code, out, _ = run(["test", path, "--column", "x", "--stat", "cusum", "--format", "csv"], capsys)
    assert code == 0
    head, row = out.strip().splitlines()
    assert head.startswith("statistic,T,scaled")
    assert row.startswith("cusum,60,")


@pytest.mark.parametrize(
    "content,args,message",
    [
        ("x\n1\n2,3\n", ["--column", "x"], "line 3"),
        ("x\n" + "1\n" * 30, ["--column", "y"], "missing column 'y'"),
        ("x\n1\nabc\n" + "1\n" * 30, ["--column", "x"], "line 3, column 'x': non-numeric"),
        ("x\n" + "0\n" * 20 + "1\n" * 20, ["--column", "x", "--variance", "split", "--trim", "k=1"], "degenerate variance"),
        ("x\n1\n2\n3\n", ["--column", "x"], "too short"),
    ],
)
def test_test_data_errors(tmp_path, capsys, content, args, message):
    path = write(tmp_path, "bad.csv", content)
    code, _, err = run(["test", path, *args], capsys)
    assert code == 2
    assert message in err


def test_usage_errors(tmp_path, capsys):
    path = write(tmp_path, "s.csv", "x\n" + "1\n2\n" * 20)
    assert run(["test", path, "--column", "x", "--stat", "bogus"], capsys)[0] == 2
    assert run(["test", path, "--column", "x", "--trim", "half"], capsys)[0] == 2
    assert run(["test", path, "--column", "x", "--alpha", "1.5"], capsys)[0] == 2
    assert run(["test", str(tmp_path / "missing.csv"), "--column", "x"], capsys)[0] == 2
    assert run(["frobnicate"], capsys)[0] == 2


def test_simulate_header_and_determinism(tmp_path, capsys):
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["simulate", "--errors", "garch11", "--T", "50", "--seed", "3", "--delta", "1", "--tstar", "10"]
    assert main(args + ["-o", str(out1)]) == 0
    assert main(args + ["-o", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    assert out1.read_text().splitlines()[0] == "t,x"


def test_simulate_matches_generator(tmp_path, capsys):
    code, out, _ = run(["simulate", "--errors", "ar1", "--T", "30", "--seed", "2", "--mu", "0.5"], capsys)
    assert code == 0
    x = np.array([float(line.split(",")[1]) for line in out.strip().splitlines()[1:]])
    assert np.array_equal(x, gen_errors(DgpSpec("ar1", T=30, seed=2)) + 0.5)


def test_simulate_spec_file_and_unwritable(tmp_path, capsys):
    spec = write(tmp_path, "spec.txt", "errors=ar1\nT=20\nrho=0.2\nseed=1\n")
    code, out, _ = run(["simulate", "--spec", spec], capsys)
    assert code == 0 and len(out.strip().splitlines()) == 21
    code, _, err = run(["simulate", "--spec", spec, "-o", str(tmp_path / "no" / "x.csv")], capsys)
    assert code == 2 and "cannot write" in err
    bad = write(tmp_path, "bad.txt", "errors=ar1\nrho=2\n")
    assert run(["simulate", "--spec", bad], capsys)[0] == 2


def test_power_single_cell(tmp_path, capsys):
    manifest = write(tmp_path, "m.txt", "statistics = renyi\ndelta = 1\nT = 80\nreps = 40\nseed = 2\n")
    svg = tmp_path / "p.svg"
    code, out, _ = run(["power", manifest, "--svg", str(svg)], capsys)
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "statistic,dgp,T,delta,tstar,reps,rejections,invalid,rate"
    assert len(lines) == 2
    assert svg.read_text().startswith("<svg")
    code2, out2, _ = run(["power", manifest], capsys)
    assert out2 == out


def test_power_manifest_error(tmp_path, capsys):
    manifest = write(tmp_path, "m.txt", "statistics = renyi\nT = many\n")
    code, _, err = run(["power", manifest], capsys)
    assert code == 2 and "'T'" in err


def fixture_file(tmp_path, capsys, seed=0, n=200):
    path = tmp_path / "ff.csv"
    assert main(["fixture", "--seed", str(seed), "--n", str(n), "-o", str(path)]) == 0
    return str(path)


def test_rolling_rows_and_svg(tmp_path, capsys):
    path = fixture_file(tmp_path, capsys)
    svg = tmp_path / "r.svg"
    code, out, _ = run(
        ["rolling", path, "--response", "excess_ret", "--regressors", ",".join(FACTORS), "--ends=-5:-1", "--svg", str(svg)],
        capsys,
    )
    assert code == 0
    lines = out.strip().splitlines()
    assert len(lines) == 6
    assert lines[0].startswith("end,label,renyi_value,renyi_p,renyi_neglog10p,renyi_argmax,renyi_status")
    for line in lines[1:]:
        cells = line.split(",")
        p = float(cells[3])
        assert 0 < p <= 1
        assert float(cells[4]) == pytest.approx(-math.log10(p), rel=1e-9)
    assert "-log10(p)" in svg.read_text()


def test_rolling_single_end_matches_test(tmp_path, capsys):
    path = fixture_file(tmp_path, capsys)
    table = load_table(path)
    y = table.column("excess_ret")
    Z = np.column_stack([np.ones(200)] + [table.column(c) for c in FACTORS])
    resid = ols_residuals(Z[:150], y[:150])
    code, out, _ = run(
        ["rolling", path, "--response", "excess_ret", "--regressors", ",".join(FACTORS), "--ends", "149", "--format", "json"],
        capsys,
    )
    assert code == 0
    row = json.loads(out)["rows"][0]
    for s in ("renyi", "cusum", "de"):
        ref = change_test(resid, s, TrimSpec(), VarianceConfig.kernel_lrv())
        assert row[s]["p"] == pytest.approx(ref.p_value, rel=1e-12)
        assert row[s]["value"] == pytest.approx(ref.scaled, rel=1e-12)


def test_rolling_removing_middle_end(tmp_path, capsys):
    path = fixture_file(tmp_path, capsys)
    base = ["rolling", path, "--response", "excess_ret", "--regressors", "mkt_rf,smb"]
    _, full, _ = run(base + ["--ends", "150,160,170"], capsys)
    _, part, _ = run(base + ["--ends", "150,170"], capsys)
    f, p = full.strip().splitlines(), part.strip().splitlines()
    assert p == [f[0], f[1], f[3]]


def test_rolling_exact_fit_markers(tmp_path, capsys):
    rng = np.random.default_rng(0)
    x = rng.standard_normal(80)
    rows = ["date,y,x"] + [f"{i},{2 * v + 1:.17g},{v:.17g}" for i, v in enumerate(x)]
    path = write(tmp_path, "lin.csv", "\n".join(rows) + "\n")
    code, out, _ = run(["rolling", path, "--response", "y", "--regressors", "x", "--ends", "60:79"], capsys)
    assert code == 0
    body = out.strip().splitlines()[1:]
    assert len(body) == 20
    assert all(line.endswith("degenerate-variance") for line in body)


def test_rolling_singular_window_marker(tmp_path, capsys):
    rows = ["date,y,x,z"] + [f"{i},{np.sin(i):.6f},{1.0 if i < 30 else float(i)},{1.0 if i < 30 else np.cos(i):.6f}" for i in range(60)]
    path = write(tmp_path, "sing.csv", "\n".join(rows) + "\n")
    code, out, _ = run(["rolling", path, "--response", "y", "--regressors", "x,z", "--ends", "20,59"], capsys)
    assert code == 0
    body = out.strip().splitlines()[1:]
    assert body[0].endswith("singular-design")
    assert ",ok," in body[1] and "singular-design" not in body[1]


def test_rolling_bad_config(tmp_path, capsys):
    path = fixture_file(tmp_path, capsys)
    assert run(["rolling", path, "--response", "excess_ret", "--ends", "10:500"], capsys)[0] == 2
    assert run(["rolling", path, "--response", "excess_ret", "--start", "50", "--ends", "40:60"], capsys)[0] == 2
    assert run(["rolling", path, "--response", "nope"], capsys)[0] == 2


def test_fixture_deterministic_and_schema(tmp_path, capsys):
    a = fixture_file(tmp_path, capsys, seed=4)
    text = open(a).read()
    b = fixture_file(tmp_path, capsys, seed=4)
    assert open(b).read() == text
    assert text.splitlines()[0] == "date,excess_ret,mkt_rf,smb,hml,rmw,cma"


def test_shipped_fixture_matches_generator(capsys):
    from importlib.resources import files

    shipped = files("renyicp").joinpath("data/ff5_synthetic.csv").read_text()
    assert main(["fixture", "--seed", "0"]) == 0
    assert capsys.readouterr().out == shipped


def test_quantile_command(capsys):
    code, out, _ = run(["quantile", "--stat", "renyi"], capsys)
    assert code == 0 and float(out) == pytest.approx(2.4932, abs=1e-4)


def test_density_command(tmp_path, capsys):
    svg = tmp_path / "d.svg"
    code, out, _ = run(["density", "--errors", "ar1", "--T", "200", "--reps", "300", "--seed", "1", "--svg", str(svg)], capsys)
    assert code == 0
    rep = json.loads(out)
    assert rep["t_T"] == 5 and rep["reps"] == 300
    assert 0 < rep["ks_distance"] < 1
    text = svg.read_text()
    assert "bandwidth rule: scott" in text and text.count("<polyline") == 2
    _, again, _ = run(["density", "--errors", "ar1", "--T", "200", "--reps", "300", "--seed", "1"], capsys)
    assert again == out
    assert run(["density", "--errors", "ar1", "--T", "200", "--reps", "1"], capsys)[0] == 2
