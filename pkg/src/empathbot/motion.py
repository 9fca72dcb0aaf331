"""Atomic motion primitives for the two-wheel base and their trajectory
synthesis.

Each action is a piecewise-constant left/right wheel-speed profile.  A
differential drive reduces to the unicycle model: linear speed
v = (v_r + v_l) / 2 and angular speed w = (v_r - v_l) / wheelbase.  Within a
constant-speed segment the pose integrates in closed form (straight line when
w = 0, circular arc of radius v / w otherwise), so trajectories are exact and
independent of the sampling step.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from pathlib import Path

from .datafile import FormatError, TableError, read_sections

__all__ = [
    "AtomicAction",
    "Pose",
    "MotionTrajectory",
    "WheelSegment",
    "UnknownAction",
    "ParameterError",
    "catalog",
    "action_by_name",
    "synthesize",
    "load_catalog",
    "DEFAULT_WHEELBASE_M",
    "DEFAULT_DT_S",
    "V_MAX",
]

DEFAULT_WHEELBASE_M = 0.2
DEFAULT_DT_S = 0.02
V_MAX = 0.3  # m/s, per-wheel speed bound


class UnknownAction(KeyError):
    """Name not present in the motion catalog (lookup is case-sensitive)."""


class ParameterError(ValueError):
    """Non-physical synthesis parameter (wheelbase, dt, ...)."""


@dataclass(frozen=True, slots=True)
class WheelSegment:
    """Constant wheel speeds (m/s) held for a duration (s)."""

    v_left: float
    v_right: float
    duration_s: float


@dataclass(frozen=True, slots=True)
class AtomicAction:
    """A named motion primitive the model can select."""

    name: str
    description: str
    segments: tuple[WheelSegment, ...]

    def __post_init__(self) -> None:
        if not self.segments:
            raise TableError(f"action {self.name!r} has no segments")
        for seg in self.segments:
            if seg.duration_s <= 0:
                raise TableError(f"action {self.name!r}: non-positive segment duration")
            if abs(seg.v_left) > V_MAX or abs(seg.v_right) > V_MAX:
                raise TableError(
                    f"action {self.name!r}: wheel speed exceeds {V_MAX} m/s"
                )

    @property
    def duration_s(self) -> float:
        return sum(seg.duration_s for seg in self.segments)


def _normalize_angle(theta: float) -> float:
    """Wrap into (-pi, pi]; -pi maps to pi."""
    return math.pi - ((math.pi - theta) % (2.0 * math.pi))


@dataclass(frozen=True, slots=True)
class Pose:
    """Planar pose: meters and radians, theta in (-pi, pi]."""

    x: float
    y: float
    theta: float

    @classmethod
    def make(cls, x: float, y: float, theta: float) -> "Pose":
        return cls(x, y, _normalize_angle(theta))


@dataclass(frozen=True)
class MotionTrajectory:
    """Timestamped pose samples for one action, starting at t = 0."""

    action_name: str
    samples: tuple[tuple[float, Pose], ...]

    def __post_init__(self) -> None:
        if not self.samples:
            raise ValueError("trajectory has no samples")
        times = [t for t, _ in self.samples]
        if times[0] != 0.0:
            raise ValueError("trajectory must start at t = 0")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("trajectory times must be strictly increasing")

    @property
    def final_pose(self) -> Pose:
        return self.samples[-1][1]

    @property
    def duration_s(self) -> float:
        return self.samples[-1][0]

    def pose_at(self, t: float) -> Pose:
        """Pose at time t, clamped to [0, duration], linear interpolation."""
        if t <= 0.0:
            return self.samples[0][1]
        if t >= self.duration_s:
            return self.final_pose
        for (t0, p0), (t1, p1) in zip(self.samples, self.samples[1:]):
            if t0 <= t <= t1:
                f = (t - t0) / (t1 - t0)
                dtheta = _normalize_angle(p1.theta - p0.theta)
                return Pose.make(
                    p0.x + f * (p1.x - p0.x),
                    p0.y + f * (p1.y - p0.y),
                    p0.theta + f * dtheta,
                )
        return self.final_pose


# ---------------------------------------------------------------------------
# Shipped catalog: 10 primitives covering the eight affects.
# ---------------------------------------------------------------------------


def _pulses(pattern: list[tuple[float, float, float]], repeat: int) -> tuple[WheelSegment, ...]:
    return tuple(WheelSegment(vl, vr, d) for _ in range(repeat) for vl, vr, d in pattern)


_CATALOG: tuple[AtomicAction, ...] = (
    AtomicAction(
        "approach",
        "Roll slowly forward toward the person.",
        (WheelSegment(0.15, 0.15, 2.0),),
    ),
    AtomicAction(
        "retreat",
        "Back away slowly to give space.",
        (WheelSegment(-0.15, -0.15, 2.0),),
    ),
    AtomicAction(
        "spin_left",
        "Spin in place counter-clockwise.",
        (WheelSegment(-0.1, 0.1, 2.0),),
    ),
    AtomicAction(
        "spin_right",
        "Spin in place clockwise.",
        (WheelSegment(0.1, -0.1, 2.0),),
    ),
    AtomicAction(
        "sway",
        "Lean gently side to side without leaving the spot.",
        _pulses(
            [(0.06, 0.18, 0.7), (-0.06, -0.18, 0.7), (0.18, 0.06, 0.7), (-0.18, -0.06, 0.7)],
            repeat=1,
        ),
    ),
    AtomicAction(
        "bounce",
        "Short eager forward-and-back hops.",
        _pulses([(0.2, 0.2, 0.3), (-0.2, -0.2, 0.3)], repeat=3),
    ),
    AtomicAction(
        "circle_cw",
        "Drive a small clockwise circle.",
        (WheelSegment(0.27, 0.03, 5.0),),
    ),
    AtomicAction(
        "circle_ccw",
        "Drive a small counter-clockwise circle.",
        (WheelSegment(0.03, 0.27, 5.0),),
    ),
    AtomicAction(
        "tremble",
        "Rapid tiny left-right shakes, staying in place.",
        _pulses([(-0.12, 0.12, 0.15), (0.12, -0.12, 0.15)], repeat=6),
    ),
    AtomicAction(
        "idle",
        "Stand still.",
        (WheelSegment(0.0, 0.0, 1.0),),
    ),
)

_BY_NAME = {a.name: a for a in _CATALOG}


def catalog() -> tuple[AtomicAction, ...]:
    """The shipped actions, fixed order, unique lowercase names."""
    return _CATALOG


def action_by_name(name: str, actions: tuple[AtomicAction, ...] | None = None) -> AtomicAction:
    """Exact-match catalog lookup; raises UnknownAction otherwise."""
    table = _BY_NAME if actions is None else {a.name: a for a in actions}
    try:
        return table[name]
    except KeyError:
        raise UnknownAction(name) from None


def _advance(pose: tuple[float, float, float], v_l: float, v_r: float,
             wheelbase_m: float, tau: float) -> tuple[float, float, float]:
    """Closed-form pose update for constant wheel speeds over tau seconds."""
    x, y, theta = pose
    v = 0.5 * (v_r + v_l)
    w = (v_r - v_l) / wheelbase_m
    if abs(w) < 1e-12:
        return (x + v * tau * math.cos(theta), y + v * tau * math.sin(theta), theta)
    radius = v / w
    theta1 = theta + w * tau
    return (
        x + radius * (math.sin(theta1) - math.sin(theta)),
        y - radius * (math.cos(theta1) - math.cos(theta)),
        theta1,
    )


def synthesize(
    action: AtomicAction,
    wheelbase_m: float = DEFAULT_WHEELBASE_M,
    dt_s: float = DEFAULT_DT_S,
) -> MotionTrajectory:
    """Sample the action's exact trajectory every dt_s plus segment boundaries.

    The pose starts at the origin facing +x.  dt_s must be positive and at
    most 0.05 s so animation consumers get smooth curves.
    """
    if wheelbase_m <= 0.0:
        raise ParameterError(f"wheelbase must be positive, got {wheelbase_m}")
    if not (0.0 < dt_s <= 0.05):
        raise ParameterError(f"dt must be in (0, 0.05], got {dt_s}")

    duration = action.duration_s
    boundaries = []
    acc = 0.0
    for seg in action.segments:
        acc += seg.duration_s
        boundaries.append(acc)
    starts = [0.0] + boundaries[:-1]

    times = [k * dt_s for k in range(int(duration / dt_s + 1e-9) + 1)]
    times.extend(boundaries)
    times.sort()
    merged: list[float] = [0.0]
    for t in times:
        if t - merged[-1] > 1e-9:
            merged.append(min(t, duration))
    if duration - merged[-1] > 1e-9:
        merged.append(duration)
    else:
        merged[-1] = duration

    samples: list[tuple[float, Pose]] = []
    pose = (0.0, 0.0, 0.0)
    prev_t = 0.0
    for i, t in enumerate(merged):
        if i > 0:
            # Boundaries are sample points, so (prev_t, t) lies inside one
            # segment; pick it by the interval midpoint.
            mid = 0.5 * (prev_t + t)
            seg = action.segments[bisect.bisect_right(starts, mid) - 1]
            pose = _advance(pose, seg.v_left, seg.v_right, wheelbase_m, t - prev_t)
        samples.append((t, Pose.make(*pose)))
        prev_t = t
    return MotionTrajectory(action.name, tuple(samples))


def load_catalog(path: str | Path) -> tuple[AtomicAction, ...]:
    """Read a ``[catalog]`` section overriding the shipped actions.

    Row shape: ``name <TAB> description <TAB> vl:vr:dur[,vl:vr:dur...]``.
    """
    sections = read_sections(path)
    rows = sections.get("catalog")
    if not rows:
        raise FormatError(0, f"no [catalog] section in {path}")
    actions: list[AtomicAction] = []
    seen: set[str] = set()
    for row in rows:
        if len(row.fields) < 3:
            raise FormatError(row.line_no, "expected name, description, segments")
        name, description, profile = row.fields[0], row.fields[1], row.fields[2]
        if name in seen:
            raise TableError(f"line {row.line_no}: duplicate action {name!r}")
        seen.add(name)
        segments = []
        for part in profile.split(","):
            triple = part.split(":")
            if len(triple) != 3:
                raise FormatError(row.line_no, f"bad segment {part!r} (want vl:vr:dur)")
            try:
                segments.append(WheelSegment(*(float(f) for f in triple)))
            except ValueError:
                raise FormatError(row.line_no, f"bad segment numbers in {part!r}") from None
        actions.append(AtomicAction(name, description, tuple(segments)))
    return tuple(actions)
