"""Prompt construction and structured-output handling for the empathy turn.

The prompt walks the model through seven instruction blocks: look at the
scene, infer the person's emotional state, choose an empathetic emoji, pick
a motion from the delimited option list, prepare an LED palette following the
delimited output format, self-check that all three outputs agree, and answer
as a single JSON object.  The reply is parsed leniently (prose and code
fences around the JSON are tolerated), validated against the emoji table and
motion catalog, and repaired with at most one follow-up message before
falling back to a neutral response.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Protocol

from .affect import AffectTables, Color, default_tables
from .leds import PALETTE_MAX, PALETTE_MIN, ColorPalette
from .motion import AtomicAction, UnknownAction, action_by_name, catalog

__all__ = [
    "PromptSpec",
    "EmpathicResponse",
    "ValidationReport",
    "Violation",
    "TurnResult",
    "build_prompt",
    "default_prompt_spec",
    "load_template",
    "parse_response",
    "repair",
    "run_turn",
    "fallback_response",
    "canonical_json",
    "to_json",
    "E_NO_JSON",
    "E_EMOJI_UNKNOWN",
    "E_MOTION_UNKNOWN",
    "E_PALETTE_FORMAT",
    "E_PALETTE_LEN",
    "E_EXPLANATION_EMPTY",
]

E_NO_JSON = "E_NO_JSON"
E_EMOJI_UNKNOWN = "E_EMOJI_UNKNOWN"
E_MOTION_UNKNOWN = "E_MOTION_UNKNOWN"
E_PALETTE_FORMAT = "E_PALETTE_FORMAT"
E_PALETTE_LEN = "E_PALETTE_LEN"
E_EXPLANATION_EMPTY = "E_EXPLANATION_EMPTY"

EXPLANATION_MAX_CHARS = 400

DEFAULT_DELIMITER = "###"
STEP_SEPARATOR = "---STEP---"

FALLBACK_EMOJI = "\U0001F610"  # neutral face
FALLBACK_MOTION = "idle"
FALLBACK_COLOR = "#808080"


class Backend(Protocol):
    """Anything that can carry a follow-up conversation with the model."""

    def send(self, text: str, image=None) -> str: ...


@dataclass(frozen=True)
class EmpathicResponse:
    """The validated three-output response plus its explanation."""

    emoji: str
    motion: str
    palette: ColorPalette
    explanation: str


@dataclass(frozen=True, slots=True)
class Violation:
    field: str
    code: str
    message: str


@dataclass
class ValidationReport:
    ok: bool
    violations: list[Violation] = field(default_factory=list)
    repaired: bool = False

    def __post_init__(self) -> None:
        if self.ok and self.violations:
            raise ValueError("ok report cannot carry violations")

    def codes(self) -> list[str]:
        return [v.code for v in self.violations]


@dataclass(frozen=True)
class PromptSpec:
    """The seven rendered instruction blocks plus the pieces they embed."""

    steps: tuple[str, ...]
    delimiter: str
    catalog_names: tuple[str, ...]
    palette_len_bounds: tuple[int, int]
    output_schema_text: str

    def __post_init__(self) -> None:
        if len(self.steps) != 7:
            raise ValueError(f"prompt needs exactly 7 steps, got {len(self.steps)}")
        blocks = self.delimited_blocks()
        for name in self.catalog_names:
            if not any(name in b for b in blocks):
                raise ValueError(f"catalog name {name!r} missing from delimited blocks")

    def delimited_blocks(self) -> list[str]:
        """Text enclosed between consecutive delimiter pairs, per step."""
        blocks = []
        for step in self.steps:
            parts = step.split(self.delimiter)
            # parts alternate outside/inside when delimiters pair up
            blocks.extend(parts[1::2])
        return blocks


DEFAULT_SCHEMA_TEXT = (
    "{\n"
    '  "emoji": "<one emoji>",\n'
    '  "motion": "<one motion name copied from the list>",\n'
    '  "palette": ["#RRGGBB", "#RRGGBB", "..."],\n'
    '  "explanation": "<why these choices, at most 400 characters>"\n'
    "}"
)


def default_template_path() -> Path:
    return Path(resources.files("empathbot").joinpath("data/prompt_template.txt"))  # type: ignore[arg-type]


def load_template(path: str | Path) -> tuple[str, ...]:
    """Read the seven prompt blocks, separated by ``---STEP---`` lines."""
    text = Path(path).read_text(encoding="utf-8")
    blocks = [b.strip("\n") for b in text.split(f"\n{STEP_SEPARATOR}\n")]
    if len(blocks) != 7:
        raise ValueError(f"template {path} has {len(blocks)} blocks, want 7")
    return tuple(blocks)


def default_prompt_spec(
    actions: tuple[AtomicAction, ...] | None = None,
    template_path: str | Path | None = None,
    delimiter: str = DEFAULT_DELIMITER,
) -> PromptSpec:
    """Render the shipped template against the motion catalog."""
    acts = actions if actions is not None else catalog()
    blocks = load_template(template_path or default_template_path())
    options = "\n".join(f"{a.name}: {a.description}" for a in acts)
    steps = tuple(
        b.format(delimiter=delimiter, motion_options=options, output_schema=DEFAULT_SCHEMA_TEXT)
        for b in blocks
    )
    return PromptSpec(
        steps=steps,
        delimiter=delimiter,
        catalog_names=tuple(a.name for a in acts),
        palette_len_bounds=(PALETTE_MIN, PALETTE_MAX),
        output_schema_text=DEFAULT_SCHEMA_TEXT,
    )


def build_prompt(spec: PromptSpec, image_note: str | None = None) -> str:
    """Join the seven blocks; byte-identical output for identical inputs."""
    text = "\n\n".join(spec.steps)
    if image_note:
        text += f"\n\nContext about the image: {image_note}"
    return text


# ---------------------------------------------------------------------------
# Parsing and validation
# ---------------------------------------------------------------------------

_DECODER = json.JSONDecoder()


def _first_json_object(raw: str) -> dict | None:
    idx = 0
    while True:
        start = raw.find("{", idx)
        if start == -1:
            return None
        try:
            obj, _ = _DECODER.raw_decode(raw, start)
        except ValueError:
            idx = start + 1
            continue
        if isinstance(obj, dict):
            return obj
        idx = start + 1


def parse_response(
    raw: str,
    tables: AffectTables | None = None,
    actions: tuple[AtomicAction, ...] | None = None,
) -> EmpathicResponse | ValidationReport:
    """Extract and validate the first JSON object in the model's reply.

    Returns the response on success, otherwise a report with one violation
    per failing field.  Never raises on arbitrary input.
    """
    tables = tables if tables is not None else default_tables()
    obj = _first_json_object(raw) if isinstance(raw, str) else None
    if obj is None:
        return ValidationReport(
            ok=False,
            violations=[Violation("response", E_NO_JSON, "no JSON object found in reply")],
        )

    violations: list[Violation] = []

    emoji = obj.get("emoji")
    if isinstance(emoji, str):
        emoji = emoji.strip()
    if not isinstance(emoji, str) or emoji not in tables.emoji:
        violations.append(
            Violation("emoji", E_EMOJI_UNKNOWN, f"emoji {emoji!r} not in the table")
        )

    motion = obj.get("motion")
    if isinstance(motion, str):
        try:
            action_by_name(motion, actions)
        except UnknownAction:
            violations.append(
                Violation("motion", E_MOTION_UNKNOWN, f"motion {motion!r} not in the catalog")
            )
    else:
        violations.append(Violation("motion", E_MOTION_UNKNOWN, "motion missing"))

    palette: ColorPalette | None = None
    entries = obj.get("palette")
    if not isinstance(entries, list) or not all(isinstance(e, str) for e in entries):
        violations.append(
            Violation("palette", E_PALETTE_FORMAT, "palette must be a list of #RRGGBB strings")
        )
    elif not (PALETTE_MIN <= len(entries) <= PALETTE_MAX):
        violations.append(
            Violation(
                "palette",
                E_PALETTE_LEN,
                f"palette length {len(entries)} outside [{PALETTE_MIN}, {PALETTE_MAX}]",
            )
        )
    else:
        try:
            palette = ColorPalette(tuple(Color.from_hex(e) for e in entries))
        except ValueError as exc:
            violations.append(Violation("palette", E_PALETTE_FORMAT, str(exc)))

    explanation = obj.get("explanation")
    if isinstance(explanation, str):
        explanation = explanation.strip()[:EXPLANATION_MAX_CHARS]
    if not isinstance(explanation, str) or not explanation:
        violations.append(
            Violation("explanation", E_EXPLANATION_EMPTY, "explanation missing or empty")
        )

    if violations:
        return ValidationReport(ok=False, violations=violations)
    assert isinstance(emoji, str) and isinstance(motion, str)
    assert palette is not None and isinstance(explanation, str)
    return EmpathicResponse(emoji, motion, palette, explanation)


def canonical_json(emoji: str, motion: str, palette_hex: list[str], explanation: str) -> str:
    """The canonical response serialization (sorted keys, compact, raw UTF-8)."""
    return json.dumps(
        {"emoji": emoji, "motion": motion, "palette": palette_hex, "explanation": explanation},
        ensure_ascii=False,
        sort_keys=True,
        separators=(",", ":"),
    )


def to_json(response: EmpathicResponse) -> str:
    return canonical_json(
        response.emoji, response.motion, response.palette.to_hex(), response.explanation
    )


def fallback_response() -> EmpathicResponse:
    """The neutral response used when validation cannot be repaired."""
    return EmpathicResponse(
        FALLBACK_EMOJI,
        FALLBACK_MOTION,
        ColorPalette.from_hex([FALLBACK_COLOR]),
        "fallback",
    )


def _repair_message(report: ValidationReport, spec: PromptSpec) -> str:
    codes = ", ".join(report.codes())
    return (
        f"Your previous reply was invalid ({codes}). "
        "Answer again with a single JSON object and nothing else, "
        "following exactly this format:\n"
        f"{spec.delimiter}\n{spec.output_schema_text}\n{spec.delimiter}"
    )


def repair(
    raw: str,
    report: ValidationReport,
    backend: Backend,
    spec: PromptSpec | None = None,
    tables: AffectTables | None = None,
    actions: tuple[AtomicAction, ...] | None = None,
) -> EmpathicResponse | ValidationReport:
    """One follow-up round: restate the output contract, re-parse the reply.

    Precondition: the report must be a failure.  At most one backend call is
    made; a still-invalid reply comes back as a report with repaired=True and
    the caller falls back to the neutral response.
    """
    if report.ok:
        raise ValueError("repair requires a failed validation report")
    spec = spec if spec is not None else default_prompt_spec(actions)
    reply = backend.send(_repair_message(report, spec))
    result = parse_response(reply, tables, actions)
    if isinstance(result, ValidationReport):
        result.repaired = True
    return result


@dataclass(frozen=True)
class TurnResult:
    """Everything produced by one image -> response turn."""

    response: EmpathicResponse
    raw_texts: tuple[str, ...]
    report: ValidationReport | None
    repaired: bool
    fell_back: bool


class _Recorder:
    """Pass-through backend that keeps every raw reply."""

    def __init__(self, backend: Backend) -> None:
        self._backend = backend
        self.texts: list[str] = []

    def send(self, text: str, image=None) -> str:
        reply = self._backend.send(text, image=image)
        self.texts.append(reply)
        return reply


def run_turn(
    backend: Backend,
    image,
    spec: PromptSpec | None = None,
    tables: AffectTables | None = None,
    actions: tuple[AtomicAction, ...] | None = None,
    image_note: str | None = None,
) -> TurnResult:
    """Prompt, parse, optionally repair once, and fall back if still invalid.

    Makes at most two backend calls.  Backend exceptions propagate to the
    caller, which decides how to degrade.
    """
    spec = spec if spec is not None else default_prompt_spec(actions)
    recorder = _Recorder(backend)
    prompt = build_prompt(spec, image_note)
    raw = recorder.send(prompt, image=image)
    first = parse_response(raw, tables, actions)
    if isinstance(first, EmpathicResponse):
        return TurnResult(first, tuple(recorder.texts), None, repaired=False, fell_back=False)
    second = repair(raw, first, recorder, spec, tables, actions)
    raws = tuple(recorder.texts)
    if isinstance(second, EmpathicResponse):
        return TurnResult(second, raws, first, repaired=True, fell_back=False)
    return TurnResult(fallback_response(), raws, second, repaired=False, fell_back=True)
