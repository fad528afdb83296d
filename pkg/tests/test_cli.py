import json
from pathlib import Path

import pytest

from bapcs.cli import build_parser, ingest_data, main
from bapcs.gof import ParseError

DATA = Path(__file__).resolve().parents[1] / "src" / "bapcs" / "data" / "carbon_fibres.txt"


def test_parse_simstudy():
    args = build_parser().parse_args(
        ["simstudy", "--setup", "1", "--plan", "1", "--reps", "2500", "--seed", "42", "--out-dir", "results/"])
    assert args.command == "simstudy" and args.setup == [1] and args.plan == [1]
    assert args.reps == 2500 and args.seed == 42 and args.out_dir == Path("results/")
    args = build_parser().parse_args(
        ["simstudy", "--setup", "all", "--plan", "all", "--seed", "1", "--out-dir", "r"])
    assert args.setup == [1, 2, 3, 4, 5, 6] and args.plan == [1, 2, 3]


def test_usage_errors(capsys, tmp_path):
    assert main(["fit-data", "--out-dir", str(tmp_path)]) == 2
    assert "--data" in capsys.readouterr().err
    assert main(["estimate", "--sample", "x.json", "--gamma", "abc", "--out", "o.json"]) == 2
    assert main(["estimate", "--sample", str(tmp_path / "missing.json"), "--out", "o.json"]) == 2
    assert main(["bogus"]) == 2
    assert main(["simstudy", "--setup", "9", "--plan", "1", "--seed", "1", "--out-dir", "r"]) == 2


def test_help_documents_formats(capsys):
    assert main(["--help"]) == 0
    out = capsys.readouterr().out
    for word in ("design file", "sample file", "data file", "simstudy tables"):
        assert word in out


def test_ingest(tmp_path):
    d = ingest_data(DATA)
    assert d.n == 69 and d.values.min() == 0.312 and d.values.max() == 2.585
    f = tmp_path / "two.txt"
    f.write_text("0.312, 0.314")
    assert ingest_data(f).n == 2
    f.write_text("0.5\n-1.0\n")
    with pytest.raises(ParseError, match="line 2, column 1"):
        ingest_data(f)


def test_bad_data_exit_code(tmp_path, capsys):
    f = tmp_path / "bad.txt"
    f.write_text("1.0, -1.0")
    assert main(["fit-data", "--data", str(f), "--out-dir", str(tmp_path / "o")]) == 2
    assert "line 1" in capsys.readouterr().err


def test_pipeline(tmp_path):
    s = tmp_path / "s.json"
    assert main(["simulate", "--setup", "1", "--alpha", "3.5", "--beta", "2.25", "--seed", "3",
                 "--out", str(s)]) == 0
    fit = tmp_path / "fit.json"
    assert main(["estimate", "--sample", str(s), "--out", str(fit)]) == 0
    doc = json.loads(fit.read_text())
    assert doc["method"] == "MLE" and len(doc["fit"]["alpha_hats"]) == 4
    assert (tmp_path / "fit_intervals.csv").read_text().startswith("target,estimate,lower,upper")
    piv = tmp_path / "piv.json"
    assert main(["pivotal", "--sample", str(s), "--draws", "2000", "--seed", "5", "--out", str(piv)]) == 0
    assert json.loads(piv.read_text())["method"] == "pivotal"
    before = s.read_bytes()
    main(["estimate", "--sample", str(s), "--out", str(fit)])
    assert s.read_bytes() == before


def test_simulate_alpha_count(tmp_path):
    assert main(["simulate", "--setup", "1", "--alpha", "1,2", "--beta", "2", "--seed", "1",
                 "--out", str(tmp_path / "s.json")]) == 2


def test_design_file(tmp_path):
    design = tmp_path / "d.json"
    design.write_text('{"facilities": [{"n": 20, "m": 12, "template": 3, "threshold": 0.6},'
                      ' {"n": 15, "m": 10, "removals": [5, 0, 0, 0, 0, 0, 0, 0, 0, 0], "threshold": null}]}')
    out = tmp_path / "s.json"
    assert main(["simulate", "--design", str(design), "--alpha", "2,3", "--beta", "1.5", "--seed", "9",
                 "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert [f["m"] for f in doc["facilities"]] == [12, 10]
    assert doc["facilities"][1]["threshold"] is None


def test_fit_and_plot_data(tmp_path, capsys):
    assert main(["fit-data", "--data", str(DATA), "--out-dir", str(tmp_path / "gof")]) == 0
    table = (tmp_path / "gof" / "gof_table.csv").read_text().splitlines()
    assert table[0] == "Model,Pars.,MLE,AIC,BIC,CAIC,HQIC,K-S,p-value"
    assert table[1].startswith('IEP,"(alpha, beta)","(43.8477')
    assert main(["plot-data", "--data", str(DATA), "--out-dir", str(tmp_path / "plots")]) == 0
    assert (tmp_path / "plots" / "ttt.csv").read_text().splitlines()[-1] == "1,1"


def test_computational_failure_exit_code(tmp_path):
    # one failure per facility leaves the pivot undefined
    s = tmp_path / "s.json"
    s.write_text('{"facilities": [{"n": 3, "m": 1, "removals": [2], "threshold": 1.0,'
                 ' "j_count": 1, "times": [0.5]}]}')
    assert main(["pivotal", "--sample", str(s), "--seed", "1", "--out", str(tmp_path / "p.json")]) == 1
