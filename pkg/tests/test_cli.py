import json
from pathlib import Path

import pytest

from app.cli import EXIT_INPUT, EXIT_NEGATIVE, EXIT_OK, EXIT_USAGE, dispatch

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def fx(name):
    return str(FIXTURES / name)


def run(capsys, *argv):
    code = dispatch(list(argv))
    out = capsys.readouterr().out
    return code, json.loads(out) if out.strip().startswith("{") else out


def test_solve_reports_optimal_mechanisms(capsys):
    code, report = run(capsys, "solve", "--game", fx("e1.json"), "--principal", "1", "--rivals", fx("e1-rivals.json"),
                       "--no-timing")
    assert code == EXIT_OK
    assert report["output"]["value"] == "6/1"
    assert {"principal": "1", "map": {"t1": "a", "t2": "a'"}} in report["output"]["mechanisms"]
    assert "timing" not in report


def test_check_fails_upr_with_negative_exit(capsys):
    code, report = run(capsys, "check", "--game", fx("e1.json"), "--mechanisms", fx("e1-mech.json"), "--variant", "upr")
    assert code == EXIT_NEGATIVE
    assert report["verdict"] == "fail"
    assert report["output"]["compatibility"]["violation"]["type"] == "t1"
    assert "seconds" in report["timing"]


def test_verify_routes_to_support_feasibility(capsys):
    code, report = run(capsys, "verify", "--game", fx("e1.json"), "--profile", fx("e1-profile.json"))
    assert code == EXIT_OK
    assert report["output"]["route"] == "support-feasibility"
    assert report["output"]["certificate"]["verdict"] == "PBE"

    code, report = run(capsys, "verify", "--game", fx("e1.json"), "--profile", fx("e1-profile.json"),
                       "--param", "p=9/10")
    assert code == EXIT_NEGATIVE
    assert report["output"]["feasibility"]["feasible"] is False


def test_support_on_intrinsic_example(capsys):
    code, _ = run(capsys, "support", "--game", fx("e2.json"), "--profile", fx("e2-profile.json"), "--param", "p=0")
    assert code == EXIT_OK


def test_find_equilibria(capsys):
    code, report = run(capsys, "find-equilibria", "--game", fx("upr-not-upnr.json"), "--no-timing")
    assert code == EXIT_OK
    assert report["output"]["count"] == 2
    assert report["output"]["compatible"] == 1


def test_pareto_command(capsys):
    code, report = run(capsys, "pareto", "--game", fx("pareto.json"),
                       "--entries", fx("pareto-p3-profile.json"), fx("pareto-shield-profile.json"))
    assert code == EXIT_OK
    assert report["output"]["dominance"] == [{"dominant": 1, "dominated": 0}]
    assert report["output"]["classification"][1]["unused_items"] == {"1": ["b"]}


def test_delegation_and_bundling_commands(capsys):
    code, _ = run(capsys, "delegation", "check", "--model", fx("delegation-regimes-jump.json"),
                  "--spec", fx("delegation-piecewise.json"))
    assert code == EXIT_NEGATIVE
    code, report = run(capsys, "bundling", "build-upgrades", "--model", fx("uniform12-premium.json"), "--base", "1")
    assert code == EXIT_OK
    assert report["output"]["structure"] == "nested"
    code, _ = run(capsys, "bundling", "split-check", "--model", fx("uniform12-union.json"),
                  "--menu1", fx("split-menu1.json"), "--menu2", fx("split-menu2-bad.json"))
    assert code == EXIT_NEGATIVE


def test_envelope_audit_command(capsys):
    code, _ = run(capsys, "envelope-audit", "--family", fx("envelope-linear.json"))
    assert code == EXIT_OK
    code, report = run(capsys, "envelope-audit", "--family", fx("envelope-linear.json"), "--lower")
    assert code == EXIT_NEGATIVE
    assert report["output"]["kink_audit"]["status"] == "fail"


def test_missing_parameter_is_an_input_error(capsys, tmp_path):
    doc = json.loads((FIXTURES / "e1.json").read_text(encoding="utf-8"))
    del doc["params"]
    game = tmp_path / "game.json"
    game.write_text(json.dumps(doc), encoding="utf-8")
    code, report = run(capsys, "check", "--game", str(game), "--mechanisms", fx("e1-mech.json"))
    assert code == EXIT_INPUT
    assert report["verdict"] == "error"


def test_precondition_maps_to_negative_exit(capsys):
    code, report = run(capsys, "delegation", "build", "--model", fx("delegation-halves.json"),
                       "--spec", fx("delegation-full.json"))
    assert code == EXIT_NEGATIVE
    assert report["verdict"] == "error"


@pytest.mark.parametrize("argv", [[], ["solve"], ["check", "--game", "x.json", "--mechanisms", "y.json", "--variant", "abc"],
                                  ["solve", "--game", "x.json", "--principal", "1", "--rivals", "r.json", "--param", "p"]])
def test_usage_errors(capsys, argv):
    assert dispatch(argv) == EXIT_USAGE


def test_unreadable_file_is_an_input_error(capsys, tmp_path):
    code, _ = run(capsys, "support", "--game", str(tmp_path / "absent.json"), "--profile", fx("e1-profile.json"))
    assert code == EXIT_INPUT


def test_reports_are_deterministic_without_timing(capsys, tmp_path):
    argv = ["find-equilibria", "--game", fx("upr-not-upnr.json"), "--no-timing"]
    first, second = tmp_path / "a.json", tmp_path / "b.json"
    assert dispatch(argv + ["--json", str(first)]) == EXIT_OK
    assert dispatch(argv + ["--json", str(second)]) == EXIT_OK
    summary = capsys.readouterr().out
    assert "find-equilibria: pass (exit 0)" in summary
    a = json.loads(first.read_text(encoding="utf-8"))
    b = json.loads(second.read_text(encoding="utf-8"))
    a.pop("command"), b.pop("command")
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)
    assert a["inputs"] == {fx("upr-not-upnr.json"): b["inputs"][fx("upr-not-upnr.json")]}


def test_battery_command(capsys):
    code, report = run(capsys, "battery", "--kind", "oracle", "--count", "20", "--seed", "3", "--no-timing")
    assert code == EXIT_OK
    assert report["output"]["rate"] == 1.0


def test_stdout_is_byte_identical_without_timing(capsys):
    argv = ["pareto", "--game", fx("pareto.json"), "--entries", fx("pareto-p3-profile.json"),
            fx("pareto-shield-profile.json"), "--no-timing"]
    dispatch(argv)
    first = capsys.readouterr().out
    dispatch(argv)
    assert capsys.readouterr().out == first
