"""Empathetic nonverbal behavior for a small companion robot.

A camera image goes to a vision-language model, which answers with an emoji
face, a wheel motion pattern, and an LED color palette plus a short
explanation.  This package holds the whole loop: affect tables and color
math, prompt construction and response validation, differential-drive motion
synthesis, LED animation rendering, a deterministic mock backend, an
evaluation harness, and the live runtime with its HTTP API.
"""

from .affect import (
    AffectLabel,
    AffectTables,
    Color,
    ValenceArousal,
    default_tables,
    emoji_to_va,
    nearest_affect,
)
from .evaluation import EvalReport, detect_mimicry, evaluate, ingest, score_response
from .images import ImageInput, ImageSource, dominant_colors
from .leds import AnimationMode, ColorPalette, mode_for_arousal, render
from .motion import AtomicAction, Pose, catalog, synthesize
from .pipeline import (
    EmpathicResponse,
    ValidationReport,
    build_prompt,
    default_prompt_spec,
    fallback_response,
    parse_response,
    run_turn,
    to_json,
)
from .runtime import Runtime, RuntimeConfig
from .vlm import BackendConfig, BackendKind, MockSession, RemoteSession

__version__ = "0.1.0"

__all__ = [
    "AffectLabel",
    "AffectTables",
    "AnimationMode",
    "AtomicAction",
    "BackendConfig",
    "BackendKind",
    "Color",
    "ColorPalette",
    "EmpathicResponse",
    "EvalReport",
    "ImageInput",
    "ImageSource",
    "MockSession",
    "Pose",
    "RemoteSession",
    "Runtime",
    "RuntimeConfig",
    "ValenceArousal",
    "ValidationReport",
    "build_prompt",
    "catalog",
    "default_prompt_spec",
    "default_tables",
    "detect_mimicry",
    "dominant_colors",
    "emoji_to_va",
    "evaluate",
    "fallback_response",
    "ingest",
    "mode_for_arousal",
    "nearest_affect",
    "parse_response",
    "render",
    "run_turn",
    "score_response",
    "synthesize",
    "to_json",
    "__version__",
]
