"""Live robot state: turns, smoothing, motion holds, and history.

Each step sends one camera image through the pipeline and folds the response
into the displayed state.  The emoji switches immediately; the palette is
blended toward the new one (alpha 0.6 per turn) so the ring never strobes; a
running motion keeps playing for a minimum hold time before the next one may
take over.  Every turn is appended to an NDJSON history file keyed by image
digest, so a restarted runtime continues turn numbering where it left off.
"""

from __future__ import annotations

import json
import math
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from .affect import AffectTables, Color, default_tables, emoji_to_va
from .images import ImageInput
from .leds import (
    DEFAULT_STRIP_LEN,
    AnimationMode,
    ColorPalette,
    LedFrame,
    mode_for_arousal,
    pixels_at,
)
from .motion import (
    DEFAULT_WHEELBASE_M,
    AtomicAction,
    MotionTrajectory,
    Pose,
    action_by_name,
    synthesize,
)
from .pipeline import EmpathicResponse, fallback_response, run_turn
from .vlm import BackendConfig, BackendError, ConfigError, make_session

__all__ = [
    "RuntimeConfig",
    "RobotState",
    "InteractionRecord",
    "HistoryStore",
    "Runtime",
    "UnknownTurn",
    "load_config",
    "DEFAULT_BLEND_ALPHA",
    "DEFAULT_MOTION_HOLD_S",
]

DEFAULT_BLEND_ALPHA = 0.6
DEFAULT_MOTION_HOLD_S = 2.0
DEFAULT_FPS = 20


class UnknownTurn(KeyError):
    """Feedback referenced a turn_id with no recorded turn."""


@dataclass(frozen=True)
class RuntimeConfig:
    backend: BackendConfig = field(default_factory=BackendConfig)
    strip_len: int = DEFAULT_STRIP_LEN
    wheelbase_m: float = DEFAULT_WHEELBASE_M
    blend_alpha: float = DEFAULT_BLEND_ALPHA
    motion_hold_s: float = DEFAULT_MOTION_HOLD_S
    fps: int = DEFAULT_FPS
    history_path: str | None = None
    store_images: bool = False

    def __post_init__(self) -> None:
        if not (0.0 < self.blend_alpha <= 1.0):
            raise ConfigError(f"blend_alpha {self.blend_alpha} outside (0, 1]")
        if self.motion_hold_s < 0:
            raise ConfigError("motion_hold_s must be >= 0")
        if not (1 <= self.fps <= 60):
            raise ConfigError(f"fps {self.fps} outside [1, 60]")
        if self.strip_len < 1:
            raise ConfigError("strip_len must be >= 1")


_CONFIG_KEYS = {
    "backend",
    "strip_len",
    "wheelbase_m",
    "blend_alpha",
    "motion_hold_s",
    "fps",
    "history_path",
    "store_images",
}
_BACKEND_KEYS = {
    "kind",
    "endpoint_url",
    "model_name",
    "api_key_env",
    "timeout_s",
    "max_retries",
    "temperature",
}


def load_config(path: str | Path) -> RuntimeConfig:
    """Read a JSON config file; unknown keys are rejected, not ignored."""
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise ConfigError(f"config {path} must be a JSON object")
    unknown = set(obj) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"config {path}: unknown keys {sorted(unknown)}")
    kwargs = dict(obj)
    backend = kwargs.pop("backend", None)
    if backend is not None:
        if not isinstance(backend, dict):
            raise ConfigError(f"config {path}: backend must be an object")
        bad = set(backend) - _BACKEND_KEYS
        if bad:
            raise ConfigError(f"config {path}: unknown backend keys {sorted(bad)}")
        bkwargs = dict(backend)
        if "kind" in bkwargs:
            from .vlm import BackendKind

            try:
                bkwargs["kind"] = BackendKind(bkwargs["kind"])
            except ValueError as exc:
                raise ConfigError(f"config {path}: {exc}") from exc
        kwargs["backend"] = BackendConfig(**bkwargs)
    try:
        return RuntimeConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"config {path}: {exc}") from exc


@dataclass(frozen=True)
class RobotState:
    """Snapshot of everything the robot is showing right now."""

    turn_id: int
    emoji: str
    palette: ColorPalette
    mode: AnimationMode
    action_name: str
    action_elapsed_s: float
    pose: Pose
    led_frame: LedFrame


@dataclass
class InteractionRecord:
    turn_id: int
    timestamp: float
    image_digest: str
    raw_texts: tuple[str, ...]
    response: EmpathicResponse
    repaired: bool
    fell_back: bool
    violation_codes: tuple[str, ...] = ()
    error: str | None = None
    user_feedback: int | None = None

    def to_event(self) -> dict:
        return {
            "type": "turn",
            "turn_id": self.turn_id,
            "timestamp": self.timestamp,
            "image_digest": self.image_digest,
            "raw": list(self.raw_texts),
            "response": {
                "emoji": self.response.emoji,
                "motion": self.response.motion,
                "palette": self.response.palette.to_hex(),
                "explanation": self.response.explanation,
            },
            "repaired": self.repaired,
            "fell_back": self.fell_back,
            "violations": list(self.violation_codes),
            "error": self.error,
        }

    @classmethod
    def from_event(cls, event: dict) -> "InteractionRecord":
        resp = event["response"]
        return cls(
            turn_id=event["turn_id"],
            timestamp=event["timestamp"],
            image_digest=event["image_digest"],
            raw_texts=tuple(event.get("raw", ())),
            response=EmpathicResponse(
                emoji=resp["emoji"],
                motion=resp["motion"],
                palette=ColorPalette.from_hex(resp["palette"]),
                explanation=resp["explanation"],
            ),
            repaired=event.get("repaired", False),
            fell_back=event.get("fell_back", False),
            violation_codes=tuple(event.get("violations", ())),
            error=event.get("error"),
        )


class HistoryStore:
    """Append-only NDJSON interaction log.

    Two event types share the file: "turn" and "feedback".  Feedback never
    rewrites a turn line; it is appended and merged at read time, so the file
    stays append-only and restarts reload both.  path None keeps everything
    in memory.
    """

    def __init__(self, path: str | Path | None = None) -> None:
        self._path = Path(path) if path is not None else None
        self._records: dict[int, InteractionRecord] = {}
        self._lock = threading.Lock()
        if self._path is not None and self._path.exists():
            self._load()

    def _load(self) -> None:
        assert self._path is not None
        with self._path.open(encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    event = json.loads(line)
                except ValueError as exc:
                    raise ConfigError(f"{self._path}:{line_no}: corrupt history: {exc}") from exc
                if event.get("type") == "turn":
                    record = InteractionRecord.from_event(event)
                    self._records[record.turn_id] = record
                elif event.get("type") == "feedback":
                    record = self._records.get(event["turn_id"])
                    if record is not None:
                        record.user_feedback = event["score"]

    def _append_line(self, event: dict) -> None:
        if self._path is None:
            return
        self._path.parent.mkdir(parents=True, exist_ok=True)
        with self._path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(event, ensure_ascii=False, sort_keys=True) + "\n")

    @property
    def last_turn_id(self) -> int:
        with self._lock:
            return max(self._records, default=0)

    def append_turn(self, record: InteractionRecord) -> None:
        with self._lock:
            self._records[record.turn_id] = record
            self._append_line(record.to_event())

    def append_feedback(self, turn_id: int, score: int, timestamp: float) -> None:
        if score not in (-1, 0, 1):
            raise ValueError(f"feedback score {score!r} not in -1, 0, 1")
        with self._lock:
            record = self._records.get(turn_id)
            if record is None:
                raise UnknownTurn(turn_id)
            record.user_feedback = score
            self._append_line(
                {"type": "feedback", "turn_id": turn_id, "score": score, "timestamp": timestamp}
            )

    def records(self) -> list[InteractionRecord]:
        with self._lock:
            return [self._records[k] for k in sorted(self._records)]

    def get(self, turn_id: int) -> InteractionRecord:
        with self._lock:
            record = self._records.get(turn_id)
            if record is None:
                raise UnknownTurn(turn_id)
            return record

    def __len__(self) -> int:
        with self._lock:
            return len(self._records)


def _compose(base: Pose, local: Pose) -> Pose:
    c, s = math.cos(base.theta), math.sin(base.theta)
    return Pose.make(
        base.x + local.x * c - local.y * s,
        base.y + local.x * s + local.y * c,
        base.theta + local.theta,
    )


class Runtime:
    """Serialized turn loop plus lock-free-looking snapshots for readers.

    clock must be monotonic seconds (injectable for tests); wall_clock only
    stamps history records.  All mutation happens under one lock; state()
    resolves any queued motion whose hold has expired before snapshotting.
    """

    def __init__(
        self,
        config: RuntimeConfig | None = None,
        tables: AffectTables | None = None,
        actions: tuple[AtomicAction, ...] | None = None,
        clock: Callable[[], float] = time.monotonic,
        wall_clock: Callable[[], float] = time.time,
    ) -> None:
        self.config = config if config is not None else RuntimeConfig()
        self.tables = tables if tables is not None else default_tables()
        self.actions = actions
        self._clock = clock
        self._wall_clock = wall_clock
        self._lock = threading.RLock()
        self.history = HistoryStore(self.config.history_path)

        fallback = fallback_response()
        now = self._clock()
        self._turn_id = self.history.last_turn_id
        self._emoji = fallback.emoji
        self._palette = fallback.palette
        self._applied_turns = 0
        self._mode = mode_for_arousal(emoji_to_va(fallback.emoji, self.tables).arousal)
        self._led_started = now
        self._action_name = fallback.motion
        # backdated so the boot-time idle never delays the first real motion
        self._action_started = now - self.config.motion_hold_s
        self._pending: tuple[str, float] | None = None
        self._base_pose = Pose.make(0.0, 0.0, 0.0)
        self._trajectories: dict[str, MotionTrajectory] = {}

    # -- internal geometry ---------------------------------------------------

    def _trajectory(self, name: str) -> MotionTrajectory:
        traj = self._trajectories.get(name)
        if traj is None:
            action = action_by_name(name, self.actions)
            traj = synthesize(action, wheelbase_m=self.config.wheelbase_m)
            self._trajectories[name] = traj
        return traj

    def _pose_at(self, now: float) -> Pose:
        traj = self._trajectory(self._action_name)
        local = traj.pose_at(min(now - self._action_started, traj.duration_s))
        return _compose(self._base_pose, local)

    def _resolve_pending(self, now: float) -> None:
        if self._pending is None:
            return
        name, start_at = self._pending
        if now < start_at:
            return
        self._base_pose = self._pose_at(start_at)
        self._action_name = name
        self._action_started = start_at
        self._pending = None

    def _set_motion(self, name: str, now: float) -> None:
        self._resolve_pending(now)
        if name == self._action_name:
            self._pending = None
            return
        held_for = now - self._action_started
        if held_for >= self.config.motion_hold_s:
            self._base_pose = self._pose_at(now)
            self._action_name = name
            self._action_started = now
            self._pending = None
        else:
            self._pending = (name, self._action_started + self.config.motion_hold_s)

    def _blend_palette(self, new: ColorPalette) -> ColorPalette:
        if self._applied_turns == 0 or len(new) != len(self._palette):
            return new
        alpha = self.config.blend_alpha
        mixed = tuple(
            Color(
                int(math.floor(alpha * n.r + (1 - alpha) * p.r + 0.5)),
                int(math.floor(alpha * n.g + (1 - alpha) * p.g + 0.5)),
                int(math.floor(alpha * n.b + (1 - alpha) * p.b + 0.5)),
            )
            for n, p in zip(new.colors, self._palette.colors)
        )
        return ColorPalette(mixed)

    # -- public API ----------------------------------------------------------

    def step(self, image: ImageInput, sidecar=None) -> RobotState:
        """Run one turn and fold the response into the displayed state.

        On a backend outage the displayed outputs stay as they are; only the
        turn counter advances and a fallback record lands in history.  The
        BackendError is re-raised so callers can report the outage.
        """
        with self._lock:
            now = self._clock()
            self._turn_id += 1
            turn_id = self._turn_id
            session = make_session(self.config.backend, sidecar=sidecar, tables=self.tables)
            try:
                turn = run_turn(session, image, tables=self.tables, actions=self.actions)
            except BackendError as exc:
                self.history.append_turn(
                    InteractionRecord(
                        turn_id=turn_id,
                        timestamp=self._wall_clock(),
                        image_digest=image.digest(),
                        raw_texts=(),
                        response=fallback_response(),
                        repaired=False,
                        fell_back=True,
                        error=str(exc),
                    )
                )
                raise
            finally:
                close = getattr(session, "close", None)
                if close is not None:
                    close()

            response = turn.response
            self._emoji = response.emoji
            self._palette = self._blend_palette(response.palette)
            self._applied_turns += 1
            self._mode = mode_for_arousal(emoji_to_va(response.emoji, self.tables).arousal)
            self._led_started = now
            self._set_motion(response.motion, now)
            self._store_image(image)
            self.history.append_turn(
                InteractionRecord(
                    turn_id=turn_id,
                    timestamp=self._wall_clock(),
                    image_digest=image.digest(),
                    raw_texts=turn.raw_texts,
                    response=response,
                    repaired=turn.repaired,
                    fell_back=turn.fell_back,
                    violation_codes=tuple(turn.report.codes()) if turn.report else (),
                )
            )
            return self._snapshot(now)

    def _store_image(self, image: ImageInput) -> None:
        if not self.config.store_images or self.config.history_path is None:
            return
        blobs = Path(self.config.history_path).parent / "blobs"
        blobs.mkdir(parents=True, exist_ok=True)
        suffix = ".png" if image.format == "PNG" else ".jpg"
        target = blobs / f"{image.digest()}{suffix}"
        if not target.exists():
            target.write_bytes(image.data)

    def _snapshot(self, now: float) -> RobotState:
        self._resolve_pending(now)
        led_t = now - self._led_started
        return RobotState(
            turn_id=self._turn_id,
            emoji=self._emoji,
            palette=self._palette,
            mode=self._mode,
            action_name=self._action_name,
            action_elapsed_s=now - self._action_started,
            pose=self._pose_at(now),
            led_frame=LedFrame(
                led_t, pixels_at(self._palette, self._mode, led_t, self.config.strip_len)
            ),
        )

    def state(self) -> RobotState:
        with self._lock:
            return self._snapshot(self._clock())

    def feedback(self, turn_id: int, score: int) -> None:
        self.history.append_feedback(turn_id, score, self._wall_clock())
