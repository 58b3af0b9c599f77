"""Command line interface: output text and exit codes."""
import json
import subprocess
import sys

from conftest import DATA


def run(*args):
    cmd = [sys.executable, "-c",
           "from mpst.cli import main; raise SystemExit(main())"]
    r = subprocess.run(cmd + [str(a) for a in args],
                       capture_output=True, text=True)
    return r.returncode, r.stdout, r.stderr


def test_version():
    rc, out, _ = run("--version")
    assert rc == 0 and out.strip() == "mpst 0.1.0"


def test_missing_subcommand_is_usage_error():
    rc, _, err = run()
    assert rc == 2 and "usage" in err


def test_parse_reprints_canonically():
    rc, out, _ = run("parse", DATA / "commit.gt")
    assert rc == 0
    assert out.strip() == ("rec t. A->B:{act. B->C:sig. A->C:commit. t, "
                           "quit. B->C:save. A->C:finish. end}")


def test_parse_handles_machines():
    rc, out, _ = run("parse", DATA / "remark_abc.cfsm")
    assert rc == 0
    assert out.startswith("machine A {\n  init q0;\n")


def test_missing_file_is_reported():
    rc, _, err = run("parse", DATA / "no_such_file.gt")
    assert rc == 2 and "cannot read" in err


def test_project():
    rc, out, _ = run("project", DATA / "commit.gt", "-p", "C")
    assert rc == 0
    assert out.strip() == "rec t. B?{save. A?finish. end, sig. A?commit. t}"


def test_wf_verdicts():
    rc, out, _ = run("wf", DATA / "commit.gt")
    assert rc == 0 and json.loads(out) == {"failures": [],
                                           "well_formed": True}
    rc, out, _ = run("wf", DATA / "remark_bad.gt")
    assert rc == 1
    j = json.loads(out)
    assert not j["well_formed"]
    assert j["failures"][0]["participant"] == "C"


def test_translate_local_type_to_machine():
    rc, out, _ = run("translate", DATA / "commit_c.lt", "-p", "C")
    assert rc == 0
    assert out.startswith("machine C {\n  init q0;\n")
    assert "q2 -- A C ? commit --> q0;" in out


def test_compat_verdicts():
    rc, out, _ = run("compat", DATA / "commit.cfsm")
    assert rc == 0 and json.loads(out) == {"compatible": True}
    rc, out, _ = run("compat", DATA / "remark_abc.cfsm")
    assert rc == 1 and json.loads(out) == {"compatible": False}
    rc, out, _ = run("compat", DATA / "remark_abc.cfsm", "--json")
    assert rc == 1
    j = json.loads(out)
    assert len(j["failures"]) == 4
    assert {f["kind"] for f in j["failures"]} == {"unhandled", "uncovered"}


def test_synth_with_verification():
    rc, out, err = run("synth", DATA / "commit.cfsm", "--verify", "8,2")
    assert rc == 0
    assert out.strip() == ("rec t0. A->B:{act. B->C:sig. A->C:commit. t0, "
                           "quit. B->C:save. A->C:finish. end}")
    assert "traces agree up to length 8 for bounds 1..2" in err


def test_synth_refuses_incompatible_machines():
    rc, out, err = run("synth", DATA / "remark_abc.cfsm")
    assert rc == 1 and out == ""
    assert "not multiparty compatible" in err


def test_check_verdicts():
    rc, out, _ = run("check", DATA / "commit.cfsm",
                     "--bound", "1", "--liveness")
    assert rc == 0
    assert json.loads(out) == {"bound": 1, "liveness": True,
                               "violations": []}
    rc, out, _ = run("check", DATA / "deadlock.cfsm", "--bound", "1")
    assert rc == 1
    j = json.loads(out)
    assert j["violations"] and j["liveness"] is None
    rc, out, _ = run("check", DATA / "uninformed.cfsm",
                     "--bound", "1", "--liveness")
    assert rc == 1
    j = json.loads(out)
    assert j["violations"] == [] and j["liveness"] is False


def test_simulate_is_deterministic():
    rc, out, _ = run("simulate", DATA / "commit.cfsm",
                     "--steps", "6", "--bound", "1")
    assert rc == 0
    lines = out.splitlines()
    assert lines[:3] == ["AB!act", "AB?act", "AC!commit"]
    assert lines[-1] == "// intermediate"
    again = run("simulate", DATA / "commit.cfsm", "--steps", "6",
                "--bound", "1")
    assert again == (rc, out, "")


def test_gproject():
    rc, out, _ = run("gproject", DATA / "data_transfer.ggt", "-p", "A")
    assert rc == 0
    assert out == (DATA / "data_transfer_a.glt").read_text()


def test_gsynth():
    rc, out, _ = run("gsynth", DATA / "commit.cfsm")
    assert rc == 0
    assert out.startswith("init x0;\nx0 = x6 + x7;\n")
    assert "x7 = A -> B : quit ; x2;" in out


def test_session_verdicts():
    rc, out, _ = run("session", DATA / "commit.cfsm")
    assert rc == 0
    j = json.loads(out)
    assert j["session_compatible"] and len(j["checks"]) == 5
    rc, out, _ = run("session", DATA / "race.cfsm")
    assert rc == 1
    j = json.loads(out)
    failed = {c["name"] for c in j["checks"] if not c["ok"]}
    assert "multiparty_compatible" in failed
    rc, _, err = run("session", DATA / "data_transfer.ggt")
    assert rc == 2 and "expects machines" in err


def test_petri():
    rc, out, _ = run("petri", DATA / "data_transfer.ggt")
    assert rc == 0
    j = json.loads(out)
    assert j["safe"] and len(j["places"]) == 11
    assert len(j["transitions"]) == 10
    rc, out, _ = run("petri", DATA / "data_transfer.ggt", "--dot")
    assert rc == 0 and out.startswith("digraph net {")


def test_dot():
    rc, out, _ = run("dot", DATA / "commit.cfsm", "-p", "A")
    assert rc == 0
    assert out.startswith('digraph "A" {') and "doublecircle" in out
    rc, _, err = run("dot", DATA / "commit.gt")
    assert rc == 2 and "dot expects" in err
