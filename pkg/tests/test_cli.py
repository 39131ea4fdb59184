"""Exit codes and output contract of the command-line driver."""

import json

import pytest
from conftest import CORPUS, marks_path, model_path, scenario_path

from comodel.cli import main

PP = str(model_path("pingpong"))
PP_SCN = str(scenario_path("pingpong_hit"))
PP_MARKS = str(marks_path("pingpong_pong_hw"))


def test_validate_ok(capsys):
    assert main(["validate", PP]) == 0
    out = capsys.readouterr()
    assert out.out == "" and out.err == ""


def test_validate_reports_errors(tmp_path, capsys):
    bad = tmp_path / "bad.model"
    bad.write_text(
        "class A { statemachine { initial I; state I {} } }\n"
        "class A { statemachine { initial I; state I {} } }\n"
    )
    assert main(["validate", str(bad)]) == 1
    err = capsys.readouterr().err
    assert err.splitlines() == ["ERROR E_DUP_CLASS A: duplicate class name"]


def test_validate_parse_error_is_input_error(tmp_path, capsys):
    bad = tmp_path / "bad.model"
    bad.write_text("class {")
    assert main(["validate", str(bad)]) == 1
    assert "expected" in capsys.readouterr().err


def test_missing_file_is_usage_error(capsys):
    assert main(["validate", "/nonexistent/nope.model"]) == 4


def test_unknown_flag_is_usage_error(capsys):
    assert main(["run", PP, "--scenario", PP_SCN, "--warp", "9"]) == 4


def test_bad_max_steps_is_usage_error(capsys):
    assert main(["run", PP, "--scenario", PP_SCN, "--max-steps", "0"]) == 4


def test_bad_latency_is_usage_error(capsys):
    assert main(["cosim", PP, "--scenario", PP_SCN, "--latency", "0"]) == 4


def test_run_summary_line(capsys, tmp_path):
    trace_file = tmp_path / "out.jsonl"
    rc = main(["run", PP, "--scenario", PP_SCN, "--trace", str(trace_file)])
    assert rc == 0
    assert capsys.readouterr().out == "outcome=quiescent steps=2 expectations=2/2\n"
    lines = trace_file.read_text().splitlines()
    assert len(lines) == 3
    assert json.loads(lines[-1])["outcome"] == "quiescent"


def test_run_failed_expectation_exits_2(tmp_path, capsys):
    scn = tmp_path / "bad.scn"
    scn.write_text("at 0 send ping.Hit(); expect ping.hits == 1; expect pong.hits == 9;\n")
    assert main(["run", PP, "--scenario", str(scn)]) == 2
    out = capsys.readouterr()
    assert "expectations=1/2" in out.out
    assert "pong.hits" in out.err


def test_run_unhandled_strict_exits_2(tmp_path, capsys):
    model = tmp_path / "m.model"
    model.write_text(
        "class A { signal S(); statemachine { initial I;"
        " state I { on S -> I { send b.S(); } } } }"
        "class B { signal S(); statemachine { initial I; state I { } } }"
        "instance a: A; instance b: B;"
    )
    scn = tmp_path / "s.scn"
    scn.write_text("at 0 send a.S();\n")
    assert main(["run", str(model), "--scenario", str(scn)]) == 2
    assert "runtime-error" in capsys.readouterr().out


def test_run_scenario_ref_error_exits_2(tmp_path, capsys):
    scn = tmp_path / "s.scn"
    scn.write_text("at 0 send ghost.Hit();\n")
    assert main(["run", PP, "--scenario", str(scn)]) == 2
    assert "E_SCENARIO_REF" in capsys.readouterr().err


def test_run_random_seed_reproducible(tmp_path):
    a = tmp_path / "a.jsonl"
    b = tmp_path / "b.jsonl"
    for path in (a, b):
        rc = main([
            "run", str(model_path("race")), "--scenario", str(scenario_path("race_single")),
            "--scheduler", "random", "--seed", "11", "--trace", str(path),
        ])
        assert rc == 0
    assert a.read_bytes() == b.read_bytes()


def test_partition_listing(capsys):
    assert main(["partition", PP, "--marks", PP_MARKS]) == 0
    assert capsys.readouterr().out == "Ping SW\nPong HW\nPong.Hit sw_to_hw\n"


def test_partition_empty_marks(capsys):
    assert main(["partition", PP]) == 0
    assert capsys.readouterr().out == "Ping SW\nPong SW\n"


def test_partition_bad_marks_exits_1(tmp_path, capsys):
    marks = tmp_path / "m.marks"
    marks.write_text("mark isHardware on Nope;\n")
    assert main(["partition", PP, "--marks", str(marks)]) == 1
    assert "E_MARK_PATH" in capsys.readouterr().err


def test_cosim_confluent(capsys):
    rc = main(["cosim", PP, "--marks", PP_MARKS, "--scenario", PP_SCN])
    assert rc == 0
    assert capsys.readouterr().out == "L1 pass L2 pass L3 pass\n"


def test_cosim_all_sw_identity(capsys):
    assert main(["cosim", PP, "--scenario", PP_SCN]) == 0
    assert capsys.readouterr().out == "L1 pass L2 pass L3 pass\n"


def test_cosim_non_confluent_informative(capsys):
    rc = main([
        "cosim", str(model_path("race")), "--marks", str(marks_path("race_beta_hw")),
        "--scenario", str(scenario_path("race_both")),
    ])
    assert rc == 0
    out = capsys.readouterr().out
    assert out.startswith("L1 pass L2 pass L3 ")
    assert "(informative)" in out


def test_gen_writes_four_files(tmp_path, capsys):
    out_dir = tmp_path / "gen"
    assert main(["gen", PP, "--marks", PP_MARKS, "-o", str(out_dir)]) == 0
    names = sorted(p.name for p in out_dir.iterdir())
    assert names == [
        "pingpong_hw.vhd",
        "pingpong_interface.json",
        "pingpong_sw.c",
        "pingpong_sw.h",
    ]


def test_gen_repartition_needs_no_model_edit(tmp_path):
    # flipping the mark moves Ping to hardware; the ping->pong send now
    # crosses the other way, and regeneration needs no model edit
    flipped = tmp_path / "flipped.marks"
    flipped.write_text("mark isHardware on Ping;\n")
    assert main(["gen", PP, "--marks", str(flipped), "-o", str(tmp_path / "g")]) == 0
    manifest = json.loads((tmp_path / "g" / "pingpong_interface.json").read_text())
    assert [(s["receiver_class"], s["direction"]) for s in manifest["signals"]] == [
        ("Pong", "hw_to_sw")
    ]
    vhdl = (tmp_path / "g" / "pingpong_hw.vhd").read_text()
    assert "entity Ping is" in vhdl


def test_gen_unwritable_out_dir(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    rc = main(["gen", PP, "--marks", PP_MARKS, "-o", str(blocker / "sub")])
    assert rc == 4


def test_checkgen_untouched_passes(tmp_path, capsys):
    out_dir = tmp_path / "gen"
    main(["gen", PP, "--marks", PP_MARKS, "-o", str(out_dir)])
    capsys.readouterr()
    assert main(["checkgen", str(out_dir)]) == 0
    assert "consistent" in capsys.readouterr().out


def test_checkgen_tamper_exits_3(tmp_path, capsys):
    out_dir = tmp_path / "gen"
    main(["gen", PP, "--marks", PP_MARKS, "-o", str(out_dir)])
    header = out_dir / "pingpong_sw.h"
    header.write_text(
        header.read_text().replace("#define SIG_PONG_HIT 0", "#define SIG_PONG_HIT 3")
    )
    capsys.readouterr()
    assert main(["checkgen", str(out_dir)]) == 3
    assert "divergence SIG_PONG_HIT" in capsys.readouterr().out


def test_checkgen_missing_manifest_exits_4(tmp_path, capsys):
    out_dir = tmp_path / "gen"
    main(["gen", PP, "--marks", PP_MARKS, "-o", str(out_dir)])
    (out_dir / "pingpong_interface.json").unlink()
    assert main(["checkgen", str(out_dir)]) == 4


def test_checkgen_missing_generated_file_exits_4(tmp_path):
    out_dir = tmp_path / "gen"
    main(["gen", PP, "--marks", PP_MARKS, "-o", str(out_dir)])
    (out_dir / "pingpong_hw.vhd").unlink()
    assert main(["checkgen", str(out_dir)]) == 4
