import json

import pytest

from gerbecoh.cli import main

C4 = {"order": 4, "table": [[0, 1, 2, 3], [1, 2, 3, 0], [2, 3, 0, 1], [3, 0, 1, 2]]}
Z4_SIGN = {"rank": 1, "action": [[[1]], [[-1]]], "relations": [[4]]}
Z4_C4 = {"rank": 1, "action": [[[1]], [[-1]], [[1]], [[-1]]], "relations": [[4]]}
TRIVIAL_Z2 = {"rank": 1, "action": [[[1]], [[1]]], "relations": [[2]]}
SIGN = {"rank_ybar": 1, "action": [[[1]], [[-1]]], "y_basis": [[2]]}


@pytest.fixture
def files(tmp_path, c2_site, c4_tower, sl2):
    data = {
        "site": c2_site.to_json(),
        "tower": c4_tower.to_json(),
        "sign": SIGN,
        "sl2": sl2.to_json(),
        "good": {"v2": [1], "v3": [-1]},
        "bad": {"v2": [1]},
        "c4": C4,
        "z4sign": Z4_SIGN,
        "z4c4": Z4_C4,
        "triv2": TRIVIAL_Z2,
        "one": {"coordinates": [1]},
        "phi": {"v1": [0, 0], "v2": [1, 3], "v3": [3, 1]},
        "fval": {"values": [0, 0, 1, 3, 0, 0, 3, 1]},
        "xi": {"w1_1": [1], "w1_2": [3], "w2_1": [2], "w3_1": [2]},
        "unstable": {"rank_ybar": 2, "action": [[[1, 0], [0, 1]], [[0, 1], [1, 0]]], "y_basis": [[1, 0], [0, 2]]},
    }
    noneq = c2_site.to_json()
    noneq["places"][0]["fiber"] = ["w1_1"]
    noneq["places"][1]["fiber"] = ["w1_2", "w2_1"]
    data["noneq"] = noneq
    out = {}
    for name, value in data.items():
        path = tmp_path / f"{name}.json"
        path.write_text(json.dumps(value))
        out[name] = str(path)
    broken = tmp_path / "broken.json"
    broken.write_text("{")
    out["broken"] = str(broken)
    out["missing"] = str(tmp_path / "nope.json")
    out["dir"] = tmp_path
    return out


def run(capsys, *argv):
    code = main(list(argv))
    text = capsys.readouterr().out
    return code, json.loads(text), text


# the documented examples --------------------------------------------------------------


def test_site_check(files, capsys):
    code, rep, _ = run(capsys, "site", "check", "--site", files["site"])
    assert code == 0 and rep["result"]["site"]["condition4"] == "pass"


def test_band_build(files, capsys):
    code, rep, _ = run(capsys, "band", "build", "--site", files["site"], "--level", "4")
    assert code == 0 and rep["result"]["invariant_factors"] == [4]
    assert rep["checks"] == {"generators_in_band": "pass"}


def test_tn_coherent(files, capsys):
    code, rep, _ = run(capsys, "tn", "coherent", "--site", files["site"], "--isogeny", files["sign"],
                       "--collection", files["good"])
    assert code == 0
    assert rep["result"]["coherent"] is True and rep["result"]["obstruction"] == "0"
    code, rep, _ = run(capsys, "tn", "coherent", "--site", files["site"], "--isogeny", files["sign"],
                       "--collection", files["bad"])
    assert code == 0 and rep["result"]["coherent"] is False and rep["result"]["obstruction"] != "0"


def test_shapiro_check(files, capsys):
    code, rep, _ = run(capsys, "shapiro", "check", "--group", files["c4"], "--subgroup", "[0,2]",
                       "--coeff", files["z4sign"])
    assert code == 0 and rep["checks"] and set(rep["checks"].values()) == {"pass"}


# the remaining commands ------------------------------------------------------------------


@pytest.mark.parametrize("argv", [
    ["band", "psi", "--site", "{site}", "--level", "4", "--coeff", "{triv2}"],
    ["band", "localize", "--site", "{site}", "--level", "4", "--coeff", "{triv2}", "--place", "v2"],
    ["band", "transition", "--tower", "{tower}", "--level", "2", "--to-level", "4", "--kind", "xi",
     "--class", "{xi}"],
    ["band", "transition", "--tower", "{tower}", "--level", "4", "--to-level", "4"],
    ["band", "transition", "--tower", "{tower}", "--level", "4", "--to-level", "8", "--kind", "phi",
     "--class", "{phi}"],
    ["band", "transition", "--tower", "{tower}", "--level", "4", "--to-level", "4", "--kind", "f",
     "--class", "{fval}"],
    ["tate", "--group", "{c4}", "--coeff", "{z4c4}"],
    ["oracle", "--group", "{c4}", "--coeff", "{z4c4}", "--degree", "2"],
    ["tn", "global", "--site", "{site}", "--isogeny", "{sign}"],
    ["tn", "global", "--site", "{site}", "--isogeny", "{sl2}"],
    ["tn", "local", "--site", "{site}", "--isogeny", "{sign}", "--place", "v2"],
    ["tn", "localize", "--site", "{site}", "--isogeny", "{sign}", "--class", "{one}"],
    ["tn", "globalize", "--site", "{site}", "--isogeny", "{sign}", "--collection", "{good}"],
    ["tn", "shriek", "--tower", "{tower}", "--isogeny", "{sign}", "--class", "{one}"],
    ["shapiro", "sh4", "--group", "{c4}", "--subgroup", "[0,2]", "--coeff", "{z4sign}"],
])
def test_commands_succeed(files, capsys, argv):
    argv = [a.format(**files) for a in argv]
    code, rep, _ = run(capsys, *argv)
    assert code == 0, rep
    assert rep["status"] == "ok" and all(v == "pass" for v in rep["checks"].values())


def test_report_values(files, capsys):
    _, rep, _ = run(capsys, "tn", "local", "--site", files["site"], "--isogeny", files["sign"], "--place", "v2")
    assert rep["result"]["local"]["v2"]["invariant_factors"] == [4]
    _, rep, _ = run(capsys, "tn", "global", "--site", files["site"], "--isogeny", files["sl2"])
    assert rep["result"]["reductive"] is True
    _, rep, _ = run(capsys, "tate", "--group", files["c4"], "--coeff", files["z4c4"])
    assert rep["result"] == {"tate_minus_one": [2], "tate_zero": [2]}
    _, rep, _ = run(capsys, "tn", "globalize", "--site", files["site"], "--isogeny", files["sign"],
                    "--collection", files["good"])
    assert rep["result"]["class"]["representative"] == {"w2_1": [1], "w3_1": [-1]}
    _, rep, _ = run(capsys, "band", "transition", "--tower", files["tower"], "--level", "2", "--to-level", "4",
                    "--kind", "xi", "--class", files["xi"])
    # xi lifted to level 4 is (2, 6, 4, 4); inert-all-the-way places double again
    assert rep["result"]["images"] == [[2, 2, 2, 2, 0, 0]]


# exit codes --------------------------------------------------------------------------------


def test_incoherent_globalize_is_semantic(files, capsys):
    code, rep, _ = run(capsys, "tn", "globalize", "--site", files["site"], "--isogeny", files["sign"],
                       "--collection", files["bad"])
    assert code == 1 and rep["error"]["type"] == "IncoherentCollection" and rep["error"]["obstruction"]


def test_level_mismatch_is_semantic(files, capsys):
    code, rep, _ = run(capsys, "band", "psi", "--site", files["site"], "--level", "3", "--coeff", files["triv2"])
    assert code == 1 and rep["error"]["kind"] == "semantic"


@pytest.mark.parametrize("argv, needle", [
    (["site", "check", "--site", "{missing}"], "nope.json"),
    (["site", "check", "--site", "{broken}"], ""),
    (["site", "check", "--site", "{noneq}"], "element 1, place w1_1"),
    (["tn", "global", "--site", "{site}", "--isogeny", "{unstable}"], "not stable"),
    (["shapiro", "check", "--group", "{c4}", "--subgroup", "[0,1]", "--coeff", "{z4sign}"], ""),
    (["band", "build", "--site", "{site}"], ""),
    (["band", "transition", "--tower", "{tower}", "--level", "4", "--to-level", "4", "--kind", "f",
      "--class", "{phi}"], "malformed"),
    (["no-such-command"], None),
])
def test_input_errors(files, capsys, argv, needle):
    argv = [a.format(**files) for a in argv]
    code = main(argv)
    captured = capsys.readouterr()
    assert code == 2
    if needle is not None:
        rep = json.loads(captured.out)
        assert rep["status"] == "bad input" and needle in rep["error"]["message"]


# determinism and output --------------------------------------------------------------------


def test_reports_are_byte_identical(files, capsys):
    argv = ["shapiro", "sh4", "--group", files["c4"], "--subgroup", "[0,2]", "--coeff", files["z4sign"],
            "--seed", "7"]
    _, _, first = run(capsys, *argv)
    _, _, second = run(capsys, *argv)
    assert first == second


def test_inputs_are_hashed(files, capsys):
    _, rep, _ = run(capsys, "band", "build", "--site", files["site"], "--level", "2")
    assert len(rep["inputs"]) == 1 and all(len(v) == 64 for v in rep["inputs"].values())


def test_out_file(files, capsys):
    target = files["dir"] / "report.json"
    code = main(["band", "build", "--site", files["site"], "--level", "4", "--out", str(target)])
    assert code == 0 and capsys.readouterr().out == ""
    assert json.loads(target.read_text())["result"]["invariant_factors"] == [4]


def test_timing_is_opt_in(files, capsys):
    _, rep, _ = run(capsys, "band", "build", "--site", files["site"], "--level", "4")
    assert "seconds" not in rep
    _, rep, _ = run(capsys, "band", "build", "--site", files["site"], "--level", "4", "--timing")
    assert rep["seconds"] >= 0
