import json
import subprocess
import sys

import pytest

from scdebug.cli import main

from conftest import FIXTURES

THEORY = str(FIXTURES / "theory.dt")
THEORY_UNFIXED = str(FIXTURES / "theory_unfixed.dt")
SD1 = str(FIXTURES / "sd1.sd")
SD2 = str(FIXTURES / "sd2.sd")
STEPPER_DT = str(FIXTURES / "stepper.dt")
STEPPER_SD = str(FIXTURES / "stepper.sd")
REFINED = str(FIXTURES / "stepper_refined")


def run(args):
    return subprocess.run(
        [sys.executable, "-m", "scdebug.cli", *args],
        capture_output=True,
        text=True,
    )


class TestAnnotate:
    def test_conflict_exits_one(self, capsys):
        assert main(["annotate", THEORY_UNFIXED, SD1]) == 1
        out = capsys.readouterr().out
        assert "Conflict in SD1: Object Coffee-UI" in out

    def test_fixed_theory_exits_zero(self, capsys):
        assert main(["annotate", THEORY, SD1]) == 0
        assert "No conflicts found." in capsys.readouterr().out

    def test_no_loop_resolves(self, capsys):
        assert main(["annotate", THEORY_UNFIXED, SD1, "--no-loop", "1:11"]) == 0

    def test_missing_file_exits_two(self, capsys):
        assert main(["annotate", THEORY, "nonexistent.sd"]) == 2

    def test_parse_error_exits_two(self, tmp_path, capsys):
        bad = tmp_path / "bad.sd"
        bad.write_text("sd S\nmsg 1 A -> B : x\n")
        assert main(["annotate", THEORY, str(bad)]) == 2
        err = capsys.readouterr().err
        assert "bad.sd:2" in err

    def test_usage_error_exits_two(self, capsys):
        assert main(["annotate"]) == 2

    def test_json_output(self, capsys):
        assert main(["annotate", THEORY_UNFIXED, SD1, "--json"]) == 1
        doc = json.loads(capsys.readouterr().out)
        assert doc["schema"] == "scdebug-report/1"
        assert [d["id"] for d in doc["conflicts"][0]["derivation"]] == [1, 11, 10]


class TestSynth:
    def test_writes_charts(self, tmp_path, capsys):
        out = tmp_path / "charts"
        assert main(["synth", THEORY, SD1, SD2, "-o", str(out)]) == 0
        assert sorted(p.name for p in out.glob("*.sc")) == [
            "Coffee-UI.sc",
            "Control.sc",
            "User.sc",
        ]

    def test_refuses_on_conflicts(self, tmp_path, capsys):
        out = tmp_path / "charts"
        assert main(["synth", THEORY_UNFIXED, SD1, "-o", str(out)]) == 1
        assert not out.exists() or not list(out.glob("*.sc"))

    def test_dot_flag(self, tmp_path, capsys):
        out, dots = tmp_path / "charts", tmp_path / "dot"
        assert main(["synth", THEORY, SD1, "-o", str(out), "--dot", str(dots)]) == 0
        assert sorted(p.name for p in dots.glob("*.dot")) == [
            "Coffee-UI.dot",
            "Control.dot",
            "User.dot",
        ]


class TestCheck:
    def test_synthesized_charts_accept_their_corpus(self, tmp_path, capsys):
        out = tmp_path / "charts"
        assert main(["synth", THEORY, SD1, SD2, "-o", str(out)]) == 0
        capsys.readouterr()
        assert main(["check", THEORY, SD1, SD2, "--charts", str(out)]) == 0
        assert "6/6 replay(s) accepted" in capsys.readouterr().out

    def test_refined_chart_reports_repair(self, capsys):
        assert main(["check", STEPPER_DT, STEPPER_SD, "--charts", REFINED]) == 1
        out = capsys.readouterr().out
        assert "repair with 1 edit(s)" in out
        assert "+ msg Env -> M : e3" in out

    def test_max_edits_zero(self, capsys):
        assert main(["check", STEPPER_DT, STEPPER_SD, "--charts", REFINED,
                     "--max-edits", "0"]) == 1
        assert "no repair" in capsys.readouterr().out

    def test_missing_chart_dir(self, capsys):
        assert main(["check", STEPPER_DT, STEPPER_SD, "--charts", "missing-dir"]) == 2


class TestDeterminism:
    @pytest.mark.parametrize(
        "args",
        [
            ["annotate", THEORY_UNFIXED, SD1],
            ["annotate", THEORY_UNFIXED, SD1, "--json"],
            ["annotate", THEORY, SD1, SD2],
            ["check", STEPPER_DT, STEPPER_SD, "--charts", REFINED, "--json"],
        ],
    )
    def test_byte_identical_runs(self, args):
        a, b = run(args), run(args)
        assert a.stdout == b.stdout and a.returncode == b.returncode

    def test_synth_byte_identical(self, tmp_path):
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            r = run(["synth", THEORY, SD1, SD2, "-o", str(out)])
            assert r.returncode == 0
            outs.append({p.name: p.read_bytes() for p in sorted(out.glob("*.sc"))})
        assert outs[0] == outs[1]
