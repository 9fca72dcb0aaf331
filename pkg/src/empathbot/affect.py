"""Affect taxonomy, valence-arousal geometry, and the emoji and color tables
that every other part of the robot scores against.

The eight discrete affects follow the common affective-imagery taxonomy
(amusement, awe, contentment, excitement, anger, disgust, fear, sadness).
Each affect carries an anchor point on the valence-arousal circumplex, a set
of hue bands describing which LED colors express it, and a set of preferred
motion names.  Emojis map to circumplex points through a curated table.

All tables load from an editable tab-separated data file (see
``data/affect_tables.tsv`` for the shipped defaults and the grammar) and are
immutable after load, so concurrent readers need no locking.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

import regex

from .datafile import FormatError, Row, TableError, read_sections

__all__ = [
    "AffectLabel",
    "ValenceArousal",
    "Color",
    "EmojiEntry",
    "HueBand",
    "AffectAnchorTable",
    "AffectTables",
    "UnknownEmoji",
    "FormatError",
    "TableError",
    "load_affect_tables",
    "default_tables",
    "nearest_affect",
    "emoji_to_va",
    "rgb_to_hsv",
]

# Saturation below this is treated as achromatic: hue is meaningless there.
ACHROMATIC_SATURATION = 0.1


class UnknownEmoji(KeyError):
    """Glyph not present in the emoji table."""


class AffectLabel(enum.Enum):
    """The eight-way affect taxonomy.  Member order is the fixed tie-break
    and first-match order used throughout."""

    AMUSEMENT = "amusement"
    AWE = "awe"
    CONTENTMENT = "contentment"
    EXCITEMENT = "excitement"
    ANGER = "anger"
    DISGUST = "disgust"
    FEAR = "fear"
    SADNESS = "sadness"

    @classmethod
    def parse(cls, text: str) -> "AffectLabel":
        try:
            return cls(text)
        except ValueError:
            raise ValueError(f"unknown affect label: {text!r}") from None

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True, slots=True)
class ValenceArousal:
    """A point on the circumplex: pleasantness and activation, each in [-1, 1]."""

    valence: float
    arousal: float

    def __post_init__(self) -> None:
        for name in ("valence", "arousal"):
            v = getattr(self, name)
            if not (-1.0 <= v <= 1.0):
                raise ValueError(f"{name} {v} outside [-1, 1]")

    def distance_to(self, other: "ValenceArousal") -> float:
        return math.hypot(self.valence - other.valence, self.arousal - other.arousal)


@dataclass(frozen=True, slots=True)
class Color:
    """8-bit RGB color.  Round-trips exactly through "#RRGGBB" hex form."""

    r: int
    g: int
    b: int

    def __post_init__(self) -> None:
        for name in ("r", "g", "b"):
            v = getattr(self, name)
            if not isinstance(v, int) or not (0 <= v <= 255):
                raise ValueError(f"channel {name}={v!r} outside [0, 255]")

    @classmethod
    def from_hex(cls, text: str) -> "Color":
        if len(text) != 7 or text[0] != "#":
            raise ValueError(f"expected #RRGGBB, got {text!r}")
        try:
            value = int(text[1:], 16)
        except ValueError:
            raise ValueError(f"expected #RRGGBB, got {text!r}") from None
        return cls(value >> 16, (value >> 8) & 0xFF, value & 0xFF)

    def to_hex(self) -> str:
        return f"#{self.r:02X}{self.g:02X}{self.b:02X}"


def rgb_to_hsv(c: Color) -> tuple[float, float, float]:
    """Convert to (hue degrees in [0, 360), saturation [0, 1], value [0, 1]).

    Achromatic colors report hue 0 with saturation 0.
    """
    r, g, b = c.r / 255.0, c.g / 255.0, c.b / 255.0
    mx = max(r, g, b)
    mn = min(r, g, b)
    delta = mx - mn
    if delta == 0.0:
        hue = 0.0
    elif mx == r:
        hue = 60.0 * (((g - b) / delta) % 6.0)
    elif mx == g:
        hue = 60.0 * ((b - r) / delta + 2.0)
    else:
        hue = 60.0 * ((r - g) / delta + 4.0)
    if hue >= 360.0:
        hue = 0.0
    saturation = 0.0 if mx == 0.0 else delta / mx
    return hue, saturation, mx


@dataclass(frozen=True, slots=True)
class EmojiEntry:
    """One scorable emoji: glyph, short name, circumplex position."""

    glyph: str
    name: str
    va: ValenceArousal


@dataclass(frozen=True, slots=True)
class HueBand:
    """Closed hue interval [lo, hi] in degrees; hi == 360 means the open end."""

    lo: float
    hi: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.lo <= self.hi <= 360.0):
            raise ValueError(f"hue band {self.lo}:{self.hi} outside [0, 360]")

    def contains(self, hue: float) -> bool:
        if self.hi == 360.0:
            return self.lo <= hue < 360.0
        return self.lo <= hue <= self.hi


@dataclass(frozen=True, slots=True)
class HueSpec:
    """Hue bands for one affect plus optional saturation/value qualifiers."""

    bands: tuple[HueBand, ...]
    min_saturation: float = 0.0
    max_value: float = 1.0

    @property
    def qualified(self) -> bool:
        return self.min_saturation > 0.0 or self.max_value < 1.0


# Achromatic colors count as expressing only these affects.
ACHROMATIC_AFFECTS = frozenset({AffectLabel.CONTENTMENT, AffectLabel.SADNESS})


@dataclass(frozen=True)
class AffectAnchorTable:
    """Per-affect circumplex anchors, hue bands, and preferred motion names."""

    anchors: dict[AffectLabel, ValenceArousal]
    hues: dict[AffectLabel, HueSpec]
    actions: dict[AffectLabel, tuple[str, ...]]

    def __post_init__(self) -> None:
        for label in AffectLabel:
            if label not in self.anchors:
                raise TableError(f"missing anchor for {label}")
            if label not in self.hues or not self.hues[label].bands:
                raise TableError(f"missing hue band for {label}")
            if label not in self.actions or not self.actions[label]:
                raise TableError(f"missing preferred action for {label}")

    def anchor(self, label: AffectLabel) -> ValenceArousal:
        return self.anchors[label]

    def color_expresses(self, label: AffectLabel, color: Color) -> bool:
        """Scoring rule: does this color fall inside the affect's hue bands?

        Achromatic colors (saturation < 0.1) have no usable hue; they count
        as in-band only for the affects in ``ACHROMATIC_AFFECTS``.
        """
        hue, sat, val = rgb_to_hsv(color)
        if sat < ACHROMATIC_SATURATION:
            return label in ACHROMATIC_AFFECTS
        spec = self.hues[label]
        if sat < spec.min_saturation or val > spec.max_value:
            return False
        return any(band.contains(hue) for band in spec.bands)


@dataclass(frozen=True)
class AffectTables:
    """Everything loaded from one affect data file."""

    anchor_table: AffectAnchorTable
    emoji: dict[str, EmojiEntry]


def nearest_affect(p: ValenceArousal, table: AffectAnchorTable) -> AffectLabel:
    """Affect whose anchor is Euclidean-nearest to p.

    Exact ties go to the earlier member of ``AffectLabel``.
    """
    best: AffectLabel | None = None
    best_d2 = math.inf
    for label in AffectLabel:
        a = table.anchors[label]
        d2 = (p.valence - a.valence) ** 2 + (p.arousal - a.arousal) ** 2
        if d2 < best_d2:
            best, best_d2 = label, d2
    assert best is not None
    return best


def emoji_to_va(glyph: str, tables: AffectTables) -> ValenceArousal:
    """Circumplex position of a table emoji.  Raises UnknownEmoji if absent."""
    entry = tables.emoji.get(glyph)
    if entry is None:
        raise UnknownEmoji(glyph)
    return entry.va


# ---------------------------------------------------------------------------
# Data-file loading
# ---------------------------------------------------------------------------


def _parse_float(row: Row, text: str, what: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise FormatError(row.line_no, f"bad {what}: {text!r}") from None


def _parse_label(row: Row, text: str) -> AffectLabel:
    try:
        return AffectLabel.parse(text)
    except ValueError as exc:
        raise TableError(f"line {row.line_no}: {exc}") from None


def _parse_va(row: Row, v_text: str, a_text: str) -> ValenceArousal:
    v = _parse_float(row, v_text, "valence")
    a = _parse_float(row, a_text, "arousal")
    try:
        return ValenceArousal(v, a)
    except ValueError as exc:
        raise TableError(f"line {row.line_no}: {exc}") from None


def _require_fields(row: Row, minimum: int) -> None:
    if len(row.fields) < minimum:
        raise FormatError(
            row.line_no, f"expected at least {minimum} tab-separated fields"
        )


def _parse_hue_row(row: Row) -> tuple[AffectLabel, HueSpec]:
    _require_fields(row, 2)
    label = _parse_label(row, row.fields[0])
    bands = []
    for part in row.fields[1].split(";"):
        lo_hi = part.split(":")
        if len(lo_hi) != 2:
            raise FormatError(row.line_no, f"bad hue band {part!r} (want lo:hi)")
        lo = _parse_float(row, lo_hi[0], "hue")
        hi = _parse_float(row, lo_hi[1], "hue")
        try:
            bands.append(HueBand(lo, hi))
        except ValueError as exc:
            raise TableError(f"line {row.line_no}: {exc}") from None
    min_sat, max_val = 0.0, 1.0
    for extra in row.fields[2:]:
        key, sep, value = extra.partition("=")
        if not sep or key not in ("smin", "vmax"):
            raise FormatError(row.line_no, f"bad hue qualifier {extra!r}")
        num = _parse_float(row, value, key)
        if not (0.0 <= num <= 1.0):
            raise TableError(f"line {row.line_no}: {key}={num} outside [0, 1]")
        if key == "smin":
            min_sat = num
        else:
            max_val = num
    return label, HueSpec(tuple(bands), min_sat, max_val)


def _grapheme_count(text: str) -> int:
    return len(regex.findall(r"\X", text))


def load_affect_tables(path: str | Path) -> AffectTables:
    """Load and validate anchors, hue bands, preferred actions, and emojis.

    Raises FormatError (with line number) for malformed lines and TableError
    (naming the offending row) for invariant violations.
    """
    sections = read_sections(path)
    for required in ("anchors", "hues", "actions", "emoji"):
        if required not in sections:
            raise FormatError(0, f"missing [{required}] section in {path}")

    anchors: dict[AffectLabel, ValenceArousal] = {}
    for row in sections["anchors"]:
        _require_fields(row, 3)
        label = _parse_label(row, row.fields[0])
        if label in anchors:
            raise TableError(f"line {row.line_no}: duplicate anchor for {label}")
        anchors[label] = _parse_va(row, row.fields[1], row.fields[2])

    hues: dict[AffectLabel, HueSpec] = {}
    for row in sections["hues"]:
        label, spec = _parse_hue_row(row)
        if label in hues:
            raise TableError(f"line {row.line_no}: duplicate hue row for {label}")
        hues[label] = spec

    actions: dict[AffectLabel, tuple[str, ...]] = {}
    for row in sections["actions"]:
        _require_fields(row, 2)
        label = _parse_label(row, row.fields[0])
        if label in actions:
            raise TableError(f"line {row.line_no}: duplicate action row for {label}")
        names = tuple(n for n in row.fields[1].split(",") if n)
        if not names:
            raise TableError(f"line {row.line_no}: empty action list for {label}")
        actions[label] = names

    emoji: dict[str, EmojiEntry] = {}
    for row in sections["emoji"]:
        _require_fields(row, 4)
        glyph, name = row.fields[0], row.fields[1]
        if _grapheme_count(glyph) != 1:
            raise TableError(
                f"line {row.line_no}: glyph {glyph!r} is not a single grapheme cluster"
            )
        if glyph in emoji:
            raise TableError(f"line {row.line_no}: duplicate glyph {glyph!r}")
        emoji[glyph] = EmojiEntry(glyph, name, _parse_va(row, row.fields[2], row.fields[3]))

    return AffectTables(AffectAnchorTable(anchors, hues, actions), emoji)


def default_tables_path() -> Path:
    return Path(resources.files("empathbot").joinpath("data/affect_tables.tsv"))  # type: ignore[arg-type]


@lru_cache(maxsize=1)
def default_tables() -> AffectTables:
    """The shipped default tables (loaded once; immutable afterwards)."""
    return load_affect_tables(default_tables_path())
