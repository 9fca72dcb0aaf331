"""Vision-language backends: a deterministic mock and an HTTP client.

The mock never touches the network.  Given a sidecar affect label it returns
that label's canonical response; without one it maps the image's dominant
color to an affect by hue and answers for that.  The remote client speaks
the OpenAI-compatible chat completions protocol over httpx, sends the image
as a base64 data URL, and retries transient failures with exponential
backoff.  The API key is read from the environment and is never logged.
"""

from __future__ import annotations

import base64
import io
import logging
import os
import time
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import httpx
from PIL import Image

from .affect import (
    ACHROMATIC_AFFECTS,
    ACHROMATIC_SATURATION,
    AffectAnchorTable,
    AffectLabel,
    AffectTables,
    default_tables,
    rgb_to_hsv,
)
from .images import ImageInput, dominant_colors
from .pipeline import canonical_json

__all__ = [
    "BackendConfig",
    "BackendError",
    "BackendKind",
    "ConfigError",
    "MockSession",
    "RemoteSession",
    "CANONICAL_RESPONSES",
    "DEFAULT_KEY_ENV",
    "canonical_response_json",
    "complete",
    "make_session",
    "mock_respond",
]

log = logging.getLogger(__name__)

DEFAULT_KEY_ENV = "EMPATHY_VLM_KEY"
MAX_INLINE_IMAGE_BYTES = 1 << 20
REENCODE_JPEG_QUALITY = 90
BACKOFF_BASE_S = 0.5
BACKOFF_FACTOR = 2.0


class ConfigError(Exception):
    """Backend configuration is unusable (missing key, URL, model...)."""


class BackendError(Exception):
    """A backend call failed.  kind is "transport" or "request"."""

    def __init__(self, kind: str, message: str) -> None:
        super().__init__(message)
        self.kind = kind


class BackendKind(Enum):
    MOCK = "mock"
    REMOTE = "remote"


@dataclass(frozen=True)
class BackendConfig:
    """How to reach the model backend.

    endpoint_url is the full chat-completions URL.  api_key_env names the
    environment variable holding the key; the key itself is never stored
    here so configs are safe to log or serialize.
    """

    kind: BackendKind = BackendKind.MOCK
    endpoint_url: str = ""
    model_name: str = ""
    api_key_env: str = DEFAULT_KEY_ENV
    timeout_s: float = 30.0
    max_retries: int = 2
    temperature: float = 0.0

    def __post_init__(self) -> None:
        if self.kind is BackendKind.REMOTE:
            if not self.endpoint_url:
                raise ConfigError("remote backend needs endpoint_url")
            if not self.model_name:
                raise ConfigError("remote backend needs model_name")
        if self.max_retries < 0:
            raise ConfigError("max_retries must be >= 0")
        if self.timeout_s <= 0:
            raise ConfigError("timeout_s must be positive")


# Canonical mock response per affect: emoji, motion, palette, explanation.
# Every emoji maps back to its own affect through the anchor table and every
# palette color sits inside its affect's hue bands, so a mock-driven
# evaluation scores perfect agreement by construction.
CANONICAL_RESPONSES: dict[AffectLabel, tuple[str, str, tuple[str, ...], str]] = {
    AffectLabel.AMUSEMENT: (
        "\U0001F602",
        "bounce",
        ("#FFB300", "#FFD54F", "#FF8F00"),
        "They look delighted, so I bounce with warm golden light.",
    ),
    AffectLabel.AWE: (
        "\U0001F632",
        "circle_ccw",
        ("#7B1FA2", "#512DA8", "#303F9F"),
        "Something wondrous holds their attention, so I circle slowly in deep violet.",
    ),
    AffectLabel.CONTENTMENT: (
        "\U0001F60C",
        "approach",
        ("#2E8B57", "#66CDAA", "#4682B4"),
        "They seem calm and at ease, so I come closer under soft green and blue.",
    ),
    AffectLabel.EXCITEMENT: (
        "\U0001F929",
        "spin_left",
        ("#FF3D00", "#FF9100", "#FFC400"),
        "Their energy is high, so I spin with hot saturated orange.",
    ),
    AffectLabel.ANGER: (
        "\U0001F620",
        "retreat",
        ("#C62828", "#D32F2F", "#8E0000"),
        "They look angry, so I back off and glow a warning red.",
    ),
    AffectLabel.DISGUST: (
        "\U0001F922",
        "retreat",
        ("#6B8E23", "#9ACD32", "#556B2F"),
        "Something repels them, so I retreat in queasy olive green.",
    ),
    AffectLabel.FEAR: (
        "\U0001F631",
        "tremble",
        ("#FF4500", "#FF8C00", "#B22222"),
        "They look frightened, so I tremble in alarmed warm tones.",
    ),
    AffectLabel.SADNESS: (
        "\U0001F622",
        "sway",
        ("#27408B", "#30507A", "#3A3A8C"),
        "They seem sad, so I sway gently in muted blue.",
    ),
}


def canonical_response_json(label: AffectLabel) -> str:
    emoji, motion, palette, explanation = CANONICAL_RESPONSES[label]
    return canonical_json(emoji, motion, list(palette), explanation)


def _circular_distance(a: float, b: float) -> float:
    d = abs(a - b) % 360.0
    return min(d, 360.0 - d)


def _affect_for_hue(hue: float, anchor_table: AffectAnchorTable) -> AffectLabel:
    """First affect (enum order) whose hue-only bands contain the hue.

    Bands carrying saturation or value qualifiers cannot be judged from a
    hue alone and are skipped.  A hue inside no band falls back to the
    angularly nearest band edge, earlier enum members winning exact ties.
    """
    plain = [
        (label, spec.bands)
        for label in AffectLabel
        if not (spec := anchor_table.hues[label]).qualified
    ]
    for label, bands in plain:
        if any(band.contains(hue) for band in bands):
            return label
    best_label, best_d = None, float("inf")
    for label, bands in plain:
        for band in bands:
            d = min(_circular_distance(hue, band.lo), _circular_distance(hue, band.hi))
            if d < best_d:
                best_label, best_d = label, d
    assert best_label is not None
    return best_label


def affect_for_image(image: ImageInput, tables: AffectTables | None = None) -> AffectLabel:
    """Dominant-color heuristic the mock uses when no sidecar label is given."""
    tables = tables if tables is not None else default_tables()
    dominant = dominant_colors(image, k=1)[0]
    hue, sat, _ = rgb_to_hsv(dominant)
    if sat < ACHROMATIC_SATURATION:
        return next(label for label in AffectLabel if label in ACHROMATIC_AFFECTS)
    return _affect_for_hue(hue, tables.anchor_table)


def mock_respond(
    image: ImageInput | None,
    sidecar: AffectLabel | None = None,
    tables: AffectTables | None = None,
) -> str:
    """Deterministic reply: canonical JSON for the sidecar or inferred affect."""
    if sidecar is not None:
        return canonical_response_json(sidecar)
    if image is None:
        raise ValueError("mock needs an image when no sidecar label is given")
    return canonical_response_json(affect_for_image(image, tables))


class MockSession:
    """Offline backend session.  Repair messages get the same canonical reply.

    The affect is chosen from the sidecar label or from the first image seen;
    later sends without an image reuse it, so repair rounds stay consistent.
    """

    def __init__(
        self,
        sidecar: AffectLabel | None = None,
        tables: AffectTables | None = None,
    ) -> None:
        self._sidecar = sidecar
        self._tables = tables
        self._image: ImageInput | None = None
        self.calls = 0

    def send(self, text: str, image: ImageInput | None = None) -> str:
        self.calls += 1
        if image is not None:
            self._image = image
        return mock_respond(self._image, self._sidecar, self._tables)


class RemoteSession:
    """One conversation with an OpenAI-compatible chat completions endpoint.

    Each send() appends a user message (with the image inlined as a data URL
    on the first turn it appears) and returns the assistant's text.  Network
    errors, 429 and 5xx are retried max_retries times with exponential
    backoff; other 4xx are not retried.
    """

    def __init__(
        self,
        config: BackendConfig,
        transport: httpx.BaseTransport | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ) -> None:
        if config.kind is not BackendKind.REMOTE:
            raise ConfigError("RemoteSession needs a remote backend config")
        key = os.environ.get(config.api_key_env)
        if not key:
            raise ConfigError(f"API key environment variable {config.api_key_env} is not set")
        self._config = config
        self._key = key
        self._sleep = sleep
        self._client = httpx.Client(transport=transport, timeout=config.timeout_s)
        self._messages: list[dict] = []
        self.calls = 0

    def close(self) -> None:
        self._client.close()

    def __enter__(self) -> "RemoteSession":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()

    def send(self, text: str, image: ImageInput | None = None) -> str:
        self.calls += 1
        content: list[dict] | str
        if image is not None:
            content = [
                {"type": "text", "text": text},
                {"type": "image_url", "image_url": {"url": _data_url(image)}},
            ]
        else:
            content = text
        self._messages.append({"role": "user", "content": content})
        reply = self._post()
        self._messages.append({"role": "assistant", "content": reply})
        return reply

    def _post(self) -> str:
        cfg = self._config
        payload = {
            "model": cfg.model_name,
            "temperature": cfg.temperature,
            "messages": self._messages,
        }
        headers = {"Authorization": f"Bearer {self._key}"}
        attempts = cfg.max_retries + 1
        delay = BACKOFF_BASE_S
        for attempt in range(attempts):
            try:
                # never log headers here: they carry the key
                log.debug(
                    "POST %s model=%s attempt=%d", cfg.endpoint_url, cfg.model_name, attempt + 1
                )
                response = self._client.post(cfg.endpoint_url, json=payload, headers=headers)
            except httpx.TransportError as exc:
                if attempt + 1 < attempts:
                    self._sleep(delay)
                    delay *= BACKOFF_FACTOR
                    continue
                raise BackendError(
                    "transport", f"request failed after {attempts} attempts: {exc}"
                ) from exc
            if response.status_code == 429 or response.status_code >= 500:
                if attempt + 1 < attempts:
                    self._sleep(delay)
                    delay *= BACKOFF_FACTOR
                    continue
                raise BackendError(
                    "transport",
                    f"HTTP {response.status_code} after {attempts} attempts",
                )
            if response.status_code >= 400:
                raise BackendError("request", f"HTTP {response.status_code}: {response.text[:200]}")
            return _extract_reply(response)
        raise AssertionError("unreachable")


def _extract_reply(response: httpx.Response) -> str:
    try:
        data = response.json()
        reply = data["choices"][0]["message"]["content"]
    except (ValueError, LookupError, TypeError) as exc:
        raise BackendError("request", f"malformed completion payload: {exc}") from exc
    if not isinstance(reply, str):
        raise BackendError("request", "completion content is not text")
    return reply


def _data_url(image: ImageInput) -> str:
    """Inline the image; oversized payloads are re-encoded as JPEG first."""
    data, fmt = image.data, image.format
    if len(data) > MAX_INLINE_IMAGE_BYTES:
        with Image.open(io.BytesIO(data)) as im:
            buf = io.BytesIO()
            im.convert("RGB").save(buf, format="JPEG", quality=REENCODE_JPEG_QUALITY)
        data, fmt = buf.getvalue(), "JPEG"
    mime = "image/png" if fmt == "PNG" else "image/jpeg"
    return f"data:{mime};base64,{base64.b64encode(data).decode('ascii')}"


def make_session(
    config: BackendConfig,
    sidecar: AffectLabel | None = None,
    tables: AffectTables | None = None,
    transport: httpx.BaseTransport | None = None,
):
    """Session factory: the sidecar label only ever steers the mock."""
    if config.kind is BackendKind.MOCK:
        return MockSession(sidecar=sidecar, tables=tables)
    return RemoteSession(config, transport=transport)


def complete(
    config: BackendConfig,
    prompt: str,
    image: ImageInput,
    sidecar: AffectLabel | None = None,
) -> str:
    """One-shot send on a fresh session."""
    session = make_session(config, sidecar=sidecar)
    try:
        return session.send(prompt, image=image)
    finally:
        close = getattr(session, "close", None)
        if close is not None:
            close()
