import json

import pytest

from qremainder import cli
from qremainder.density_models import BenfordSignificandDensity
from qremainder.errors import (
    EXIT_CODES,
    PrecisionError,
    RejectionBudgetError,
    ToleranceError,
)
from qremainder.gof_stats import GofExperiment, rejection_rate
from qremainder.reports import DataSeries, RunConfig, parse_range, table1


def _series(capsys, argv):
    assert cli.main(argv) == 0
    return DataSeries.from_csv(capsys.readouterr().out)


def test_tv_curve_example(capsys):
    s = _series(capsys, ["tv-curve", "--model", "power:alpha=2", "--q", "2", "--n", "0..10"])
    assert len(s.rows) == 11
    exact = s.column("exact")
    assert all(a > b for a, b in zip(exact, exact[1:]))
    assert exact[0] == pytest.approx(0.25)
    assert s.metadata["model"] == "power:alpha=2" and s.metadata["q"] == "2"


def test_coupling_tail_example(capsys):
    s = _series(capsys, ["coupling", "--model", "benford:q=10", "--tail", "--depth", "3"])
    assert s.column("n") == [0, 1, 2, 3]
    tail = s.column("prob_N_gt")
    assert all(a > 5 * b for a, b in zip(tail, tail[1:]))


def test_coupling_envelope_and_sample(capsys):
    env = _series(capsys, ["coupling", "--model", "benford:q=10", "--depth", "3", "--envelope", "1"])
    assert env.columns == ["x", "envelope"]
    a = _series(capsys, ["coupling", "--model", "power:alpha=0.5", "--sample", "50", "--seed", "3"])
    b = _series(capsys, ["coupling", "--model", "power:alpha=0.5", "--sample", "50", "--seed", "3"])
    assert a.rows == b.rows and len(a.rows) == 50


def test_gof_matches_library(capsys):
    s = _series(capsys, ["gof", "--model", "benford:q=2", "--n", "2", "--k", "1", "--reps", "200", "--seed", "1"])
    exp = GofExperiment(BenfordSignificandDensity(2), 2, 2, 1, replications=200, seed=1)
    assert s.column("rejection_rate")[0] == rejection_rate(exp).rejection_rate


def test_pdf_cdf_and_sample(capsys, tmp_path):
    pdf = _series(capsys, ["pdf", "--model", "uniform", "--n", "2", "--grid", "5"])
    assert pdf.column("f_n") == [1.0] * 5
    cdf = _series(capsys, ["cdf", "--model", "power:alpha=2", "--n", "1", "--grid", "3"])
    assert cdf.column("F_n") == pytest.approx([0.0, 0.375, 1.0])
    out = tmp_path / "s.json"
    assert cli.main(["sample", "--model", "benford:q=10", "--count", "20", "--format", "json", "-o", str(out)]) == 0
    payload = json.loads(out.read_text())
    assert len(payload["rows"]) == 20 and payload["metadata"]["seed"] == "0"


def test_config_file_and_override(capsys, tmp_path):
    cfg = RunConfig(subcommand="tv-curve", model="power:alpha=5", n="0..3")
    path = tmp_path / "cfg.json"
    path.write_text(cfg.to_json())
    s = _series(capsys, ["tv-curve", "--config", str(path), "--n", "0..4"])
    assert len(s.rows) == 5 and s.metadata["model"] == "power:alpha=5"
    path.write_text(json.dumps({"subcommand": "pdf", "colour": "red"}))
    assert cli.main(["pdf", "--config", str(path)]) == EXIT_CODES["domain"]


def test_run_config_round_trip():
    cfg = RunConfig(subcommand="gof", model="benford:q=2", q=2, n="2", k=3, seed=7, full=True, tol=1e-9)
    assert RunConfig.from_json(cfg.to_json()) == cfg
    assert RunConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(ValueError):
        RunConfig.from_dict({"subcommand": "pdf", "bogus": 1})


def test_data_series_round_trip():
    s = DataSeries("demo", ["a", "b"], [(1, 0.1), (2, None), (3, 1e-300)], {"model": "uniform", "q": 2})
    back = DataSeries.from_csv(s.to_csv())
    assert back.rows == s.rows and back.name == "demo"
    assert back.metadata == {"model": "uniform", "q": "2"}
    assert s.to_csv().count("\r") == 0
    with pytest.raises(ValueError):
        DataSeries("bad", ["a", "b"], [(1,)])


def test_parse_range():
    assert parse_range("3") == [3]
    assert parse_range("0..3") == [0, 1, 2, 3]
    assert parse_range("1,4,6") == [1, 4, 6]
    with pytest.raises(ValueError):
        parse_range("4..1")


@pytest.mark.parametrize(
    "argv,family",
    [
        ([], "usage"),
        (["pdf", "--grid", "ten"], "usage"),
        (["pdf", "--model", "power:alpha=-1"], "domain"),
        (["cdf", "--model", "bogus"], "domain"),
        (["pdf"], "domain"),
        (["pdf", "--model", "power:alpha=2", "--n", "30"], "budget"),
        (["coupling", "--model", "power:alpha=2", "--envelope", "1", "--depth", "2"], "unsupported"),
    ],
)
def test_exit_codes(argv, family, capsys):
    assert cli.main(argv) == EXIT_CODES[family]
    if family != "usage":
        assert "qremainder: error:" in capsys.readouterr().err


@pytest.mark.parametrize(
    "exc,family",
    [
        (ToleranceError("no convergence"), "tolerance"),
        (PrecisionError("too deep"), "precision"),
        (RejectionBudgetError("too many proposals"), "rejection"),
    ],
)
def test_exit_codes_for_numeric_failures(monkeypatch, exc, family):
    def boom(cfg):
        raise exc

    monkeypatch.setattr(cli, "run", boom)
    assert cli.main(["pdf", "--model", "uniform"]) == EXIT_CODES[family]


def test_exit_codes_distinct():
    codes = [v for k, v in EXIT_CODES.items() if k != "ok"]
    assert len(set(codes)) == len(codes) and 0 not in codes


@pytest.mark.slow
def test_reproduce_all(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["reproduce-all", "-o", str(a)]) == 0
    assert cli.main(["reproduce-all", "-o", str(b)]) == 0
    names = sorted(p.name for p in a.iterdir())
    assert names == sorted(
        f"{n}.csv" for n in ("figure1_left", "figure1_middle", "figure1_right", "figure2_left",
                             "figure2_right", "figure3_a", "figure3_b", "figure3_c", "table1", "table2")
    )
    for name in names:
        assert (a / name).read_bytes() == (b / name).read_bytes()
        s = DataSeries.read(a / name)
        assert s.rows and all(len(r) == len(s.columns) for r in s.rows)
        assert "version" in s.metadata


def test_table1_first_digit_rows_all_reject():
    # the first block after the leading digit is rejected in every replication
    t1 = table1(seed=0)
    first = {r[t1.columns.index("k")]: r[t1.columns.index("rejection_rate")]
             for r in t1.rows if r[t1.columns.index("n")] == 1}
    assert first == {1: 1.0, 2: 1.0, 3: 1.0}
