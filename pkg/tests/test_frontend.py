"""Parsing, printing and error locations for the three DSLs."""

import pytest
from conftest import CORPUS, CORPUS_MODELS, CORPUS_PAIRS, load_model, load_scenario

from comodel import frontend, ir
from comodel.frontend import (
    ParseError,
    parse_marks,
    parse_model,
    parse_scenario,
    print_marks,
    print_model,
    print_scenario,
)


def test_empty_model():
    model = parse_model("")
    assert model.classes == [] and model.instances == []


def test_pingpong_structure(pingpong):
    assert [c.name for c in pingpong.classes] == ["Ping", "Pong"]
    assert [(i.name, i.class_name) for i in pingpong.instances] == [
        ("ping", "Ping"),
        ("pong", "Pong"),
    ]
    waiting = pingpong.classes[0].machine.states[0]
    assert waiting.name == "Waiting"
    assert len(waiting.transitions) == 1
    assert len(waiting.transitions[0].actions) == 2


def test_class_without_name_fails_at_line_one():
    with pytest.raises(ParseError) as exc:
        parse_model("class {")
    assert exc.value.loc.line == 1
    assert "name" in exc.value.expected or "identifier" in exc.value.expected


@pytest.mark.parametrize(
    "text",
    [
        "class A { attr x u8; statemachine { initial I; state I {} } }",
        "class A { statemachine { initial I; state I { on S -> {} } } }",
        "instance a A;",
        "class A { statemachine { state I {} } }",
        "mystery;",
    ],
)
def test_model_syntax_errors(text):
    with pytest.raises(ParseError):
        parse_model(text)


def test_two_statemachines_rejected():
    with pytest.raises(ParseError) as exc:
        parse_model(
            "class A { statemachine { initial I; state I {} }"
            " statemachine { initial J; state J {} } }"
        )
    assert "one statemachine" in exc.value.expected


def test_keywords_are_reserved():
    with pytest.raises(ParseError):
        parse_model("class send { statemachine { initial I; state I {} } }")


def test_parse_determinism():
    text = (CORPUS / "widths.model").read_text()
    assert parse_model(text) == parse_model(text)


@pytest.mark.parametrize("name", CORPUS_MODELS)
def test_model_round_trip(name):
    model = load_model(name)
    assert parse_model(print_model(model)) == model


@pytest.mark.parametrize("_, name", CORPUS_PAIRS)
def test_scenario_round_trip(_, name):
    scenario = load_scenario(name)
    assert parse_scenario(print_scenario(scenario)) == scenario


def test_marks_round_trip():
    marks = parse_marks("mark isHardware on Pong; mark weight = 3 on Ping.Hit;")
    assert parse_marks(print_marks(marks)) == marks


# --- marks ---


def test_mark_value_defaults_true():
    marks = parse_marks("mark isHardware on Pong;")
    assert marks.marks == [ir.Mark("isHardware", True, "Pong")]


def test_empty_marks():
    assert parse_marks("").marks == []


def test_duplicate_mark_rejected():
    with pytest.raises(ParseError) as exc:
        parse_marks("mark isHardware on Pong; mark isHardware on Pong;")
    assert exc.value.code == "E_DUP_MARK"


def test_same_key_different_paths_ok():
    marks = parse_marks("mark isHardware on Pong; mark isHardware on Ping;")
    assert len(marks.marks) == 2


def test_mark_values():
    marks = parse_marks("mark a = false on X; mark b = 7 on X.y;")
    assert marks.marks[0].value is False
    assert marks.marks[1].value == 7
    assert marks.marks[1].path == "X.y"


# --- scenarios ---


def test_scenario_injection():
    s = parse_scenario("at 0 send ping.Hit();")
    assert s.injections == [ir.Injection(0, "ping", "Hit", [])]
    assert not s.confluent


def test_scenario_expectation():
    s = parse_scenario("expect pong.hits == 1;")
    assert s.expectations == [ir.Expectation("pong", "hits", 1)]


def test_scenario_negative_step_rejected():
    with pytest.raises(ParseError):
        parse_scenario("at -1 send ping.Hit();")


def test_scenario_args_and_confluent():
    s = parse_scenario("at 2 send g.Load(true, 250, 1000, 5); confluent;")
    assert s.injections[0].args == [True, 250, 1000, 5]
    assert s.confluent


# --- error location fidelity ---


def _corrupt(text: str, tok: frontend.Token) -> str:
    lines = text.split("\n")
    row = tok.loc.line - 1
    col = tok.loc.column - 1
    line = lines[row]
    lines[row] = line[:col] + "?" + line[col + len(tok.value):]
    return "\n".join(lines)


@pytest.mark.parametrize(
    "fname,parser",
    [
        ("pingpong.model", parse_model),
        ("pingpong_pong_hw.marks", parse_marks),
        ("pingpong_hit.scn", parse_scenario),
    ],
)
def test_single_token_corruption_located(fname, parser):
    text = (CORPUS / fname).read_text()
    tokens = frontend._tokenize(text, fname)[:-1]  # drop eof
    for tok in tokens:
        corrupted = _corrupt(text, tok)
        with pytest.raises(ParseError) as exc:
            parser(corrupted)
        loc = exc.value.loc
        # never past the corrupted token
        assert (loc.line, loc.column) <= (tok.loc.line, tok.loc.column)
