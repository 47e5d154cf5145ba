import json
import subprocess
import sys

import numpy as np
import pytest

from nsdistill import io as nsio
from nsdistill.boxes import B_CC, InvalidBoxError, make_correlated, make_pr, random_nonsignaling_box
from nsdistill.cli import build_parser, run
from nsdistill.dynamics import iterate, map_t, map_t2
from nsdistill.wiring import compose, paper_protocol


def test_box_round_trip(rng):
    for _ in range(20):
        b = random_nonsignaling_box(rng)
        for text in (nsio.box_to_json(b), nsio.box_to_csv(b)):
            back = nsio.box_from_text(text)
            assert np.array_equal(back.p, b.p)


def test_box_json_shape():
    obj = json.loads(nsio.box_to_json(make_pr()))
    assert list(obj) == ["p"] and len(obj["p"]) == 16
    # canonical order (x, y, a, b): x=y=0 block first
    assert obj["p"][:4] == [0.5, 0.0, 0.0, 0.5]
    assert obj["p"][12:] == [0.0, 0.5, 0.5, 0.0]


@pytest.mark.parametrize("text", ["", "{}", "1,2,3", "a,b"])
def test_box_parse_errors(text):
    with pytest.raises(InvalidBoxError):
        nsio.box_from_text(text)


def test_trajectory_csv():
    text = nsio.trajectory_csv(iterate(map_t, 0.01, chsh_threshold=B_CC))
    header, rows = nsio.read_csv(text)
    assert header == ["step", "eps", "chsh"]
    assert len(rows) == 13 and rows[-1][0] == "12"
    text = nsio.trajectory_csv(iterate(map_t2, (0.3, 0.5), max_n=3))
    header, rows = nsio.read_csv(text)
    assert header == ["step", "xi", "gamma", "chsh"] and len(rows) == 4


def cli(capsys, *argv, stdin=None, monkeypatch=None):
    if stdin is not None:
        import io
        monkeypatch.setattr(sys, "stdin", io.StringIO(stdin))
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_cli_examples(capsys):
    assert cli(capsys, "chsh", "--eps", "0.5")[:2] == (0, "3.0\n")
    assert cli(capsys, "map", "--eps", "0.5", "--steps", "1")[:2] == (0, "0.625\n")
    code, out, _ = cli(capsys, "trajectory", "--eps", "0.01", "--until-chsh", "3.2659863")
    header, rows = nsio.read_csv(out)
    assert code == 0 and header == ["step", "eps", "chsh"]
    assert rows[-1][0] == "12" and float(rows[-1][2]) > 3.2659863
    assert float(rows[-2][2]) <= 3.2659863


def test_cli_values_round_trip(capsys):
    code, out, _ = cli(capsys, "map", "--eps", "0.3", "--steps", "4")
    e = 0.3
    for _ in range(4):
        e = map_t(e)
    assert float(out) == e


def test_cli_compose_round_trip(capsys, monkeypatch):
    code, out, _ = cli(capsys, "box", "--name", "pr", "--format", "json")
    assert code == 0
    code, out2, _ = cli(capsys, "compose", "--box", "-", "--with", "-", "--format", "json",
                        stdin=out, monkeypatch=monkeypatch)
    assert code == 0
    assert np.array_equal(nsio.box_from_text(out2).p, make_pr().p)


def test_cli_compose_default_protocol(capsys, tmp_path):
    f = tmp_path / "box.csv"
    f.write_text(nsio.box_to_csv(make_correlated(0.5)))
    code, out, _ = cli(capsys, "compose", "--box", str(f))
    b = make_correlated(0.5)
    assert np.array_equal(nsio.box_from_text(out).p, compose(b, b, paper_protocol()).p)


def test_cli_exit_codes(capsys):
    assert cli(capsys, "chsh", "--eps", "2")[0] == 2
    assert cli(capsys, "nosuch")[0] == 2
    assert cli(capsys, "chsh", "--eps", "0.1", "--name", "pr")[0] == 2
    assert cli(capsys, "compose", "--name", "pr", "--alice", "40000")[0] == 2
    assert cli(capsys, "box", "--box", "/nonexistent/file")[0] == 2


def test_cli_help_for_every_subcommand(capsys):
    parser = build_parser()
    sub = next(a for a in parser._actions if a.dest == "command")
    assert set(sub.choices) == {"chsh", "box", "compose", "map", "trajectory", "fixed-points",
                                "depolarize", "verify", "search", "region", "fig3", "fig4"}
    for name in sub.choices:
        assert run([name, "--help"]) == 0
    capsys.readouterr()


def test_cli_fixed_points_json(capsys):
    code, out, _ = cli(capsys, "fixed-points", "--dim", "2", "--format", "json")
    rows = json.loads(out)
    assert [r["classification"] for r in rows] == ["saddle", "repulsive", "attractive"]


def test_cli_depolarize(capsys):
    code, out, _ = cli(capsys, "depolarize", "--name", "pc")
    b = nsio.box_from_text(out)
    assert b.p[0, 0, 0, 0] == pytest.approx(0.375)


def test_cli_search_json(capsys):
    code, out, err = cli(capsys, "search", "--eps", "0.5", "--sample", "20", "--format", "json")
    res = json.loads(out)
    assert code == 0
    assert set(res) >= {"best_chsh", "best_pairs", "evaluated", "include_crossed"}
    assert res["best_chsh"] >= 3.25 - 1e-9
    assert "100%" in err


def test_cli_verify_and_figs(capsys):
    code, out, _ = cli(capsys, "verify", "--format", "json")
    assert code == 0 and json.loads(out)["ok"]
    code, out, _ = cli(capsys, "fig3")
    assert nsio.read_csv(out)[0] == ["eps", "chsh_i", "chsh_f"]
    code, out, _ = cli(capsys, "fig3", "--table", "staircase")
    assert nsio.read_csv(out)[0] == ["step", "eps", "chsh"]
    code, out, _ = cli(capsys, "region", "--resolution", "11")
    header, rows = nsio.read_csv(out)
    assert header == ["xi", "gamma", "chsh0", "class", "one_step", "n_to_collapse"]
    assert len(rows) == 121
    code, out, _ = cli(capsys, "fig4", "--resolution", "5", "--table", "quantum", "--samples", "11")
    assert nsio.read_csv(out)[0] == ["xi", "gamma"]


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "nsdistill", "chsh", "--name", "pr"],
                          capture_output=True, text=True, check=True)
    assert proc.stdout == "4.0\n"
