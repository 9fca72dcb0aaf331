"""LED strip rendering: turns a model-chosen color palette into per-tick
frames with an animation mode matched to the emotional arousal.

All math is plain linear RGB with half-away-from-zero rounding applied per
channel, so every frame is bit-exact and can be compared against golden
dumps.  Gamma and perceptual concerns belong to the display client.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .affect import Color

__all__ = [
    "ColorPalette",
    "LedFrame",
    "AnimationKind",
    "AnimationMode",
    "ParameterError",
    "gradient",
    "pixels_at",
    "render",
    "mode_for_arousal",
    "dump_frames",
    "parse_frame_dump",
    "DEFAULT_STRIP_LEN",
]

DEFAULT_STRIP_LEN = 12
PALETTE_MIN, PALETTE_MAX = 1, 16


class ParameterError(ValueError):
    """Rendering parameter out of its documented range."""


@dataclass(frozen=True)
class ColorPalette:
    """Ordered palette of 1 to 16 colors."""

    colors: tuple[Color, ...]

    def __post_init__(self) -> None:
        n = len(self.colors)
        if not (PALETTE_MIN <= n <= PALETTE_MAX):
            raise ParameterError(f"palette length {n} outside [{PALETTE_MIN}, {PALETTE_MAX}]")

    @classmethod
    def from_hex(cls, entries: Iterable[str]) -> "ColorPalette":
        return cls(tuple(Color.from_hex(e) for e in entries))

    def to_hex(self) -> list[str]:
        return [c.to_hex() for c in self.colors]

    def __len__(self) -> int:
        return len(self.colors)


@dataclass(frozen=True)
class LedFrame:
    """Strip state at time t: one color per pixel."""

    t: float
    pixels: tuple[Color, ...]


class AnimationKind(enum.Enum):
    STATIC_GRADIENT = "static_gradient"
    PULSE = "pulse"
    CHASE = "chase"
    FADE_CYCLE = "fade_cycle"


@dataclass(frozen=True, slots=True)
class AnimationMode:
    kind: AnimationKind
    rate_hz: float = 1.0

    def __post_init__(self) -> None:
        if not (0.0 < self.rate_hz <= 5.0):
            raise ParameterError(f"rate {self.rate_hz} Hz outside (0, 5]")


def _round_half_away(x: float) -> int:
    return int(math.floor(x + 0.5)) if x >= 0 else -int(math.floor(-x + 0.5))


def _lerp(a: Color, b: Color, f: float) -> Color:
    return Color(
        _round_half_away(a.r + (b.r - a.r) * f),
        _round_half_away(a.g + (b.g - a.g) * f),
        _round_half_away(a.b + (b.b - a.b) * f),
    )


def gradient(palette: ColorPalette, strip_len: int) -> tuple[Color, ...]:
    """Spread the palette across the strip as a piecewise-linear gradient.

    Pixel i samples the path through the palette at parameter
    i / (strip_len - 1), so the first and last pixels equal the first and
    last palette colors exactly.
    """
    if strip_len < 1:
        raise ParameterError(f"strip length must be >= 1, got {strip_len}")
    colors = palette.colors
    if len(colors) == 1 or strip_len == 1:
        return tuple([colors[0]] * strip_len) if len(colors) == 1 else (colors[0],)
    segs = len(colors) - 1
    out = []
    for i in range(strip_len):
        u = i / (strip_len - 1) * segs
        j = min(int(u), segs - 1)
        out.append(_lerp(colors[j], colors[j + 1], u - j))
    return tuple(out)


def _scale(pixels: Sequence[Color], brightness: float) -> tuple[Color, ...]:
    return tuple(
        Color(
            _round_half_away(p.r * brightness),
            _round_half_away(p.g * brightness),
            _round_half_away(p.b * brightness),
        )
        for p in pixels
    )


def _rotate(pixels: Sequence[Color], k: int) -> tuple[Color, ...]:
    n = len(pixels)
    k %= n
    return tuple(pixels[(i - k) % n] for i in range(n))


def pixels_at(
    palette: ColorPalette,
    mode: AnimationMode,
    t: float,
    strip_len: int = DEFAULT_STRIP_LEN,
) -> tuple[Color, ...]:
    """Strip contents at animation time t (seconds from the mode's start).

    static_gradient holds the gradient; pulse scales it by a sine brightness
    that starts dark (zero at t = 0); chase rotates it; fade_cycle shows one
    palette color at a time with linear cross-fades.
    """
    base = gradient(palette, strip_len)
    if mode.kind is AnimationKind.STATIC_GRADIENT:
        return base
    if mode.kind is AnimationKind.PULSE:
        b = 0.5 * (1.0 + math.sin(2.0 * math.pi * mode.rate_hz * t - math.pi / 2.0))
        return _scale(base, min(1.0, max(0.0, b)))
    if mode.kind is AnimationKind.CHASE:
        return _rotate(base, int(math.floor(strip_len * mode.rate_hz * t + 1e-9)))
    colors = palette.colors  # FADE_CYCLE
    m = len(colors)
    phase = mode.rate_hz * t * m
    idx = int(math.floor(phase)) % m
    frac = phase - math.floor(phase)
    return tuple([_lerp(colors[idx], colors[(idx + 1) % m], frac)] * strip_len)


def render(
    palette: ColorPalette,
    mode: AnimationMode,
    strip_len: int = DEFAULT_STRIP_LEN,
    fps: int = 20,
    duration_s: float = 2.0,
) -> list[LedFrame]:
    """Produce floor(fps * duration) + 1 frames at t = k / fps."""
    if not (1 <= fps <= 60):
        raise ParameterError(f"fps {fps} outside [1, 60]")
    if not (0.0 < duration_s <= 60.0):
        raise ParameterError(f"duration {duration_s} s outside (0, 60]")
    n_frames = int(math.floor(fps * duration_s + 1e-9)) + 1
    return [LedFrame(k / fps, pixels_at(palette, mode, k / fps, strip_len)) for k in range(n_frames)]


def mode_for_arousal(arousal: float) -> AnimationMode:
    """Pick the animation for an arousal level in [-1, 1].

    Calm states hold a steady gradient; increasingly aroused states fade,
    pulse, then chase.
    """
    if arousal < -0.33:
        return AnimationMode(AnimationKind.STATIC_GRADIENT, 1.0)
    if arousal < 0.2:
        return AnimationMode(AnimationKind.FADE_CYCLE, 0.2)
    if arousal < 0.6:
        return AnimationMode(AnimationKind.PULSE, 0.5)
    return AnimationMode(AnimationKind.CHASE, 1.0)


def dump_frames(frames: Iterable[LedFrame]) -> str:
    """Bit-exact frame dump: one line per frame, ``t<TAB>#RRGGBB,...``.

    Times are printed with repr-shortest float formatting, so identical
    frames always produce identical bytes.
    """
    lines = []
    for f in frames:
        lines.append(f"{f.t!r}\t" + ",".join(c.to_hex() for c in f.pixels))
    return "\n".join(lines) + "\n"


def parse_frame_dump(text: str) -> list[LedFrame]:
    frames = []
    for line in text.splitlines():
        if not line.strip():
            continue
        t_text, _, pix_text = line.partition("\t")
        pixels = tuple(Color.from_hex(p) for p in pix_text.split(","))
        frames.append(LedFrame(float(t_text), pixels))
    return frames
