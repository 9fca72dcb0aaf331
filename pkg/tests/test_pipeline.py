import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from empathbot.affect import default_tables
from empathbot.motion import catalog
from empathbot.pipeline import (
    DEFAULT_DELIMITER,
    E_EMOJI_UNKNOWN,
    E_EXPLANATION_EMPTY,
    E_MOTION_UNKNOWN,
    E_NO_JSON,
    E_PALETTE_FORMAT,
    E_PALETTE_LEN,
    EXPLANATION_MAX_CHARS,
    EmpathicResponse,
    PromptSpec,
    ValidationReport,
    Violation,
    build_prompt,
    canonical_json,
    default_prompt_spec,
    fallback_response,
    load_template,
    parse_response,
    repair,
    run_turn,
    to_json,
)

TABLES = default_tables()
ACTIONS = catalog()


def valid_payload(**over) -> dict:
    base = {
        "emoji": "\U0001F60A",
        "motion": "approach",
        "palette": ["#2E8B57", "#4682B4"],
        "explanation": "calm scene",
    }
    base.update(over)
    return base


def parse(obj) -> EmpathicResponse | ValidationReport:
    return parse_response(json.dumps(obj, ensure_ascii=False), TABLES, ACTIONS)


class ScriptedBackend:
    """Replays canned replies and records what it was asked."""

    def __init__(self, *replies: str) -> None:
        self._replies = list(replies)
        self.prompts: list[str] = []
        self.images: list[object] = []

    def send(self, text: str, image=None) -> str:
        self.prompts.append(text)
        self.images.append(image)
        return self._replies.pop(0)


# -- prompt ------------------------------------------------------------------


class TestPrompt:
    def test_seven_steps_and_four_delimiters(self):
        spec = default_prompt_spec()
        assert len(spec.steps) == 7
        prompt = build_prompt(spec)
        assert prompt.count(DEFAULT_DELIMITER) == 4

    def test_prompt_is_byte_stable(self):
        assert build_prompt(default_prompt_spec()) == build_prompt(default_prompt_spec())

    def test_every_motion_name_sits_between_delimiters(self):
        spec = default_prompt_spec()
        blocks = spec.delimited_blocks()
        for action in ACTIONS:
            assert any(f"{action.name}: {action.description}" in b for b in blocks)

    def test_output_schema_sits_between_delimiters(self):
        spec = default_prompt_spec()
        assert any('"palette"' in b for b in spec.delimited_blocks())

    def test_image_note_is_appended(self):
        spec = default_prompt_spec()
        assert build_prompt(spec, "indoor scene").endswith("Context about the image: indoor scene")

    def test_custom_delimiter(self):
        spec = default_prompt_spec(delimiter="@@@")
        prompt = build_prompt(spec)
        assert prompt.count("@@@") == 4
        assert DEFAULT_DELIMITER not in prompt

    def test_spec_rejects_wrong_step_count(self):
        spec = default_prompt_spec()
        with pytest.raises(ValueError):
            PromptSpec(
                spec.steps[:6],
                spec.delimiter,
                spec.catalog_names,
                spec.palette_len_bounds,
                spec.output_schema_text,
            )

    def test_spec_rejects_missing_catalog_name(self):
        spec = default_prompt_spec()
        with pytest.raises(ValueError, match="moonwalk"):
            PromptSpec(
                spec.steps,
                spec.delimiter,
                spec.catalog_names + ("moonwalk",),
                spec.palette_len_bounds,
                spec.output_schema_text,
            )

    def test_load_template_block_count(self, tmp_path):
        bad = tmp_path / "t.txt"
        bad.write_text("one\n---STEP---\ntwo\n", encoding="utf-8")
        with pytest.raises(ValueError, match="2 blocks"):
            load_template(bad)


# -- parsing -----------------------------------------------------------------


def test_parse_valid_reply():
    got = parse(valid_payload())
    assert isinstance(got, EmpathicResponse)
    assert got.emoji == "\U0001F60A"
    assert got.motion == "approach"
    assert got.palette.to_hex() == ["#2E8B57", "#4682B4"]


def test_parse_tolerates_prose_and_fences():
    raw = "Sure! Here you go:\n```json\n" + json.dumps(valid_payload()) + "\n```\nHope it helps."
    assert isinstance(parse_response(raw, TABLES, ACTIONS), EmpathicResponse)


def test_first_decodable_object_wins():
    raw = '{"x": 1} ' + json.dumps(valid_payload())
    got = parse_response(raw, TABLES, ACTIONS)
    assert isinstance(got, ValidationReport)  # the decoy object is the one validated
    assert E_EMOJI_UNKNOWN in got.codes()


def test_non_dict_json_is_skipped():
    raw = "[1, 2, 3] then " + json.dumps(valid_payload())
    assert isinstance(parse_response(raw, TABLES, ACTIONS), EmpathicResponse)


def test_emoji_whitespace_is_stripped():
    got = parse(valid_payload(emoji=" \U0001F60A "))
    assert isinstance(got, EmpathicResponse)


def test_explanation_is_truncated():
    got = parse(valid_payload(explanation="x" * 1000))
    assert isinstance(got, EmpathicResponse)
    assert len(got.explanation) == EXPLANATION_MAX_CHARS


@pytest.mark.parametrize(
    "raw",
    ["", "no json here", "{{{", '{"emoji": }', "}{", "null"],
)
def test_no_json_code(raw):
    got = parse_response(raw, TABLES, ACTIONS)
    assert isinstance(got, ValidationReport)
    assert got.codes() == [E_NO_JSON]


@pytest.mark.parametrize(
    "payload,code",
    [
        (valid_payload(emoji="\U0001F984"), E_EMOJI_UNKNOWN),
        ({k: v for k, v in valid_payload().items() if k != "emoji"}, E_EMOJI_UNKNOWN),
        (valid_payload(emoji=42), E_EMOJI_UNKNOWN),
        (valid_payload(motion="moonwalk"), E_MOTION_UNKNOWN),
        ({k: v for k, v in valid_payload().items() if k != "motion"}, E_MOTION_UNKNOWN),
        (valid_payload(palette="#FFFFFF"), E_PALETTE_FORMAT),
        (valid_payload(palette=[1, 2]), E_PALETTE_FORMAT),
        (valid_payload(palette=["red"]), E_PALETTE_FORMAT),
        (valid_payload(palette=["#12345"]), E_PALETTE_FORMAT),
        ({k: v for k, v in valid_payload().items() if k != "palette"}, E_PALETTE_FORMAT),
        (valid_payload(palette=[]), E_PALETTE_LEN),
        (valid_payload(palette=["#000000"] * 17), E_PALETTE_LEN),
        (valid_payload(explanation=""), E_EXPLANATION_EMPTY),
        (valid_payload(explanation="   "), E_EXPLANATION_EMPTY),
        ({k: v for k, v in valid_payload().items() if k != "explanation"}, E_EXPLANATION_EMPTY),
        (valid_payload(explanation=42), E_EXPLANATION_EMPTY),
    ],
)
def test_single_field_violations(payload, code):
    got = parse(payload)
    assert isinstance(got, ValidationReport)
    assert got.codes() == [code]


def test_violations_accumulate():
    got = parse(valid_payload(emoji="\U0001F984", motion="moonwalk", explanation=""))
    assert isinstance(got, ValidationReport)
    assert got.codes() == [E_EMOJI_UNKNOWN, E_MOTION_UNKNOWN, E_EXPLANATION_EMPTY]


@settings(max_examples=300, deadline=None)
@given(st.text(max_size=300))
def test_parser_never_raises_on_text(raw):
    got = parse_response(raw, TABLES, ACTIONS)
    assert isinstance(got, (EmpathicResponse, ValidationReport))


@settings(max_examples=200, deadline=None)
@given(st.binary(max_size=300))
def test_parser_never_raises_on_decoded_bytes(data):
    got = parse_response(data.decode("latin-1"), TABLES, ACTIONS)
    assert isinstance(got, (EmpathicResponse, ValidationReport))


hex_color = st.integers(0, 0xFFFFFF).map(lambda v: f"#{v:06X}")
explanations = st.text(
    st.characters(blacklist_categories=("Cs",), blacklist_characters="\x00"),
    min_size=1,
    max_size=EXPLANATION_MAX_CHARS,
).filter(lambda s: s.strip())


@settings(max_examples=200, deadline=None)
@given(
    emoji=st.sampled_from(sorted(TABLES.emoji)),
    motion=st.sampled_from([a.name for a in ACTIONS]),
    palette=st.lists(hex_color, min_size=1, max_size=16),
    explanation=explanations,
)
def test_canonical_round_trip(emoji, motion, palette, explanation):
    raw = canonical_json(emoji, motion, palette, explanation)
    got = parse_response(raw, TABLES, ACTIONS)
    assert isinstance(got, EmpathicResponse)
    assert got.emoji == emoji
    assert got.motion == motion
    assert got.palette.to_hex() == palette
    assert got.explanation == explanation.strip()[:EXPLANATION_MAX_CHARS]
    assert to_json(got) == canonical_json(emoji, motion, palette, got.explanation)


def test_canonical_json_bytes_pinned():
    got = canonical_json("\U0001F610", "idle", ["#808080"], "fallback")
    assert got == '{"emoji":"\U0001F610","explanation":"fallback","motion":"idle","palette":["#808080"]}'


def test_fallback_response_shape():
    fb = fallback_response()
    assert fb.emoji == "\U0001F610"
    assert fb.motion == "idle"
    assert fb.palette.to_hex() == ["#808080"]
    assert fb.explanation == "fallback"
    # the fallback must itself survive validation
    assert isinstance(parse_response(to_json(fb), TABLES, ACTIONS), EmpathicResponse)


def test_report_cannot_be_ok_with_violations():
    with pytest.raises(ValueError):
        ValidationReport(ok=True, violations=[Violation("emoji", E_EMOJI_UNKNOWN, "x")])


# -- repair and the full turn ------------------------------------------------


def failing_report() -> ValidationReport:
    got = parse(valid_payload(emoji="\U0001F984"))
    assert isinstance(got, ValidationReport)
    return got


def test_repair_requires_a_failure():
    backend = ScriptedBackend()
    with pytest.raises(ValueError):
        repair("raw", ValidationReport(ok=True), backend)


def test_repair_message_restates_the_contract():
    backend = ScriptedBackend(json.dumps(valid_payload()))
    got = repair("raw", failing_report(), backend, default_prompt_spec(), TABLES, ACTIONS)
    assert isinstance(got, EmpathicResponse)
    (message,) = backend.prompts
    assert E_EMOJI_UNKNOWN in message
    assert message.count(DEFAULT_DELIMITER) == 2
    assert '"palette"' in message


def test_repair_failure_is_marked():
    backend = ScriptedBackend("still garbage")
    got = repair("raw", failing_report(), backend, default_prompt_spec(), TABLES, ACTIONS)
    assert isinstance(got, ValidationReport)
    assert got.repaired is True
    assert got.codes() == [E_NO_JSON]


def test_run_turn_happy_path(red_image):
    backend = ScriptedBackend(json.dumps(valid_payload()))
    result = run_turn(backend, red_image, tables=TABLES, actions=ACTIONS)
    assert result.response.motion == "approach"
    assert result.report is None
    assert not result.repaired and not result.fell_back
    assert len(result.raw_texts) == 1
    assert backend.images == [red_image]


def test_run_turn_repairs_once(red_image):
    backend = ScriptedBackend("garbage", json.dumps(valid_payload()))
    result = run_turn(backend, red_image, tables=TABLES, actions=ACTIONS)
    assert result.repaired and not result.fell_back
    assert result.report is not None and result.report.codes() == [E_NO_JSON]
    assert len(result.raw_texts) == 2
    assert len(backend.prompts) == 2


def test_run_turn_falls_back_after_two_bad_replies(red_image):
    backend = ScriptedBackend("garbage", "more garbage")
    result = run_turn(backend, red_image, tables=TABLES, actions=ACTIONS)
    assert result.fell_back and not result.repaired
    assert result.response == fallback_response()
    assert result.report is not None and result.report.repaired is True
    assert len(backend.prompts) == 2  # never a third call


def test_run_turn_lets_backend_errors_propagate(red_image):
    class Exploding:
        def send(self, text, image=None):
            raise RuntimeError("socket closed")

    with pytest.raises(RuntimeError):
        run_turn(Exploding(), red_image, tables=TABLES, actions=ACTIONS)
