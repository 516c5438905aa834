"""Command-line contracts: exit codes, file formats, determinism."""

import json
import re

import numpy as np
import pytest

from lognls import cli


def run(argv):
    return cli.main(argv)


class TestGround:
    def test_single_branch(self, tmp_path, capsys):
        out = tmp_path / "ground.json"
        code = run(["ground", "--gamma", "2", "--omega", "0",
                    "--grid-n", "1024", "--out", str(out)])
        assert code == 0
        doc = json.loads(out.read_text())
        assert len(doc["branches"]) == 1
        b = doc["branches"][0]
        assert b["branch"] == "symmetric"
        assert b["stationary_residual"]["interior"] <= 1e-3
        assert max(b["pair_residuals"]) <= 1e-10

    def test_three_branches_action_order(self, tmp_path):
        out = tmp_path / "g3.json"
        assert run(["ground", "--gamma", "3", "--grid-n", "1024", "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert len(doc["branches"]) == 3
        acts = {b["branch"]: b["action_closed_form"] for b in doc["branches"]}
        assert acts["asymmetric-left"] < acts["symmetric"]
        assert acts["asymmetric-right"] < acts["symmetric"]

    def test_negative_gamma_usage_error(self, capsys):
        assert run(["ground", "--gamma", "-1"]) == 1
        assert "gamma must be positive" in capsys.readouterr().err

    def test_bad_flag_usage_error(self):
        assert run(["ground", "--bogus", "1"]) == 1


class TestBifurcate:
    def test_transition_detected(self, tmp_path, capsys):
        out = tmp_path / "sweep.csv"
        code = run(["bifurcate", "--gamma-min", "1.5", "--gamma-max", "2.5",
                    "--steps", "101", "--out", str(out)])
        assert code == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "gamma,branch,t1,t2,action"
        msg = capsys.readouterr().out
        match = re.search(r"\((\S+), (\S+)\]", msg)
        assert match, msg
        lo, hi = float(match.group(1)), float(match.group(2))
        # one grid spacing (0.01) around the pitchfork at gamma = 2
        assert lo < hi
        assert 2.0 - 0.011 <= lo and hi <= 2.0 + 0.011

    def test_single_point(self, tmp_path):
        out = tmp_path / "one.csv"
        assert run(["bifurcate", "--gamma-min", "3", "--gamma-max", "3",
                    "--out", str(out)]) == 0
        rows = out.read_text().strip().splitlines()
        assert len(rows) == 1 + 3  # header plus one row per branch

    def test_unwritable_output_leaves_nothing(self, tmp_path):
        target = tmp_path / "missing-dir" / "sweep.csv"
        assert run(["bifurcate", "--gamma-min", "1", "--gamma-max", "2",
                    "--steps", "3", "--out", str(target)]) == 1
        assert not target.exists()
        assert not list(tmp_path.iterdir())

    def test_invalid_range(self):
        assert run(["bifurcate", "--gamma-min", "3", "--gamma-max", "2"]) == 1


class TestMinimize:
    def test_matches_closed_form(self, tmp_path, capsys):
        out = tmp_path / "field.csv"
        code = run(["minimize", "--gamma", "1", "--grid-n", "1024",
                    "--out", str(out)])
        assert code == 0
        msg = capsys.readouterr().out
        rel = float(re.search(r"relative difference:\s+(\S+)", msg).group(1))
        assert abs(rel) < 0.01
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "x,re_u,im_u"
        assert len(lines) == 1 + 1024

    def test_nonconvergence_exit_code(self, capsys):
        code = run(["minimize", "--gamma", "3", "--grid-n", "1024",
                    "--max-iter", "2"])
        assert code == 2
        assert "numerical failure" in capsys.readouterr().err


class TestEvolve:
    def test_trajectory_csv(self, tmp_path):
        out = tmp_path / "traj.csv"
        code = run(["evolve", "--gamma", "2", "--grid-n", "1024",
                    "--dt", "1e-3", "--t-end", "0.2", "--record-every", "50",
                    "--out", str(out)])
        assert code == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "t,mass,energy,dist_sigma,dist_w"
        rows = [[float(v) for v in ln.split(",")] for ln in lines[1:]]
        assert len(rows) == 1 + 4
        m0 = rows[0][1]
        assert all(abs(r[1] - m0) <= 1e-10 * m0 for r in rows)

    def test_snapshots_written(self, tmp_path):
        out = tmp_path / "traj.csv"
        prefix = tmp_path / "snap"
        code = run(["evolve", "--gamma", "2", "--grid-n", "1024",
                    "--dt", "1e-2", "--t-end", "0.5", "--record-every", "10",
                    "--snapshot-every", "2", "--snapshot-prefix", str(prefix),
                    "--out", str(out)])
        assert code == 0
        snaps = sorted(tmp_path.glob("snap_t*.csv"))
        assert len(snaps) == 2
        header = snaps[0].read_text().splitlines()[0]
        assert header == "x,re_u,im_u"


class TestStability:
    ARGS = ["stability", "--gamma", "2", "--grid-n", "512", "--grid-l", "10",
            "--dt", "2.5e-3", "--t-end", "0.5", "--trials", "2",
            "--rng-seed", "11", "--record-every", "50"]

    def test_byte_identical_given_seed(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        assert run(self.ARGS + ["--out", str(a)]) == 0
        assert run(self.ARGS + ["--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_summary_contents(self, tmp_path):
        out = tmp_path / "s.json"
        assert run(self.ARGS + ["--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert doc["mode"] == "gated"
        assert len(doc["trials"]) == 2
        assert doc["max_ratio"] == max(t["ratio"] for t in doc["trials"])

    def test_excited_run_labeled_exploratory(self, tmp_path):
        out = tmp_path / "e.json"
        args = ["stability", "--gamma", "3", "--branch", "symmetric",
                "--grid-n", "512", "--grid-l", "10", "--dt", "2.5e-3",
                "--t-end", "0.1", "--trials", "1", "--rng-seed", "0",
                "--record-every", "20", "--out", str(out)]
        assert run(args) == 0
        assert "exploratory" in json.loads(out.read_text())["mode"]


class TestConfigFile:
    def test_file_applies_and_flags_override(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("gamma = 3.0\ngrid_n = 1024   # comment\n")
        out = tmp_path / "g.json"
        assert run(["ground", "--config", str(cfg), "--out", str(out)]) == 0
        assert len(json.loads(out.read_text())["branches"]) == 3
        out2 = tmp_path / "g2.json"
        assert run(["ground", "--config", str(cfg), "--gamma", "1.5",
                    "--out", str(out2)]) == 0
        doc = json.loads(out2.read_text())
        assert doc["gamma"] == 1.5
        assert len(doc["branches"]) == 1

    def test_unknown_key_rejected(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("gampa = 3.0\n")
        assert run(["ground", "--config", str(cfg)]) == 1

    def test_missing_file_rejected(self, tmp_path):
        assert run(["ground", "--config", str(tmp_path / "nope.cfg")]) == 1


def test_float_format_is_17_significant_digits(tmp_path):
    out = tmp_path / "one.csv"
    assert run(["bifurcate", "--gamma-min", "3", "--gamma-max", "3",
                "--out", str(out)]) == 0
    row = out.read_text().strip().splitlines()[1].split(",")
    for tok in (row[0], row[2], row[3], row[4]):
        assert tok == format(float(tok), ".17g")
    # round-trip exactness: 17 significant digits preserve the double
    assert float(row[2]) == float(format(float(row[2]), ".17g"))
