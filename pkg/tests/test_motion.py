import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import euler_final_pose
from empathbot.datafile import FormatError, TableError
from empathbot.motion import (
    DEFAULT_WHEELBASE_M,
    V_MAX,
    AtomicAction,
    MotionTrajectory,
    ParameterError,
    Pose,
    UnknownAction,
    WheelSegment,
    action_by_name,
    catalog,
    load_catalog,
    synthesize,
)

ACTION_NAMES = [
    "approach",
    "retreat",
    "spin_left",
    "spin_right",
    "sway",
    "bounce",
    "circle_cw",
    "circle_ccw",
    "tremble",
    "idle",
]


def wrapped(theta: float) -> float:
    return math.remainder(theta, 2.0 * math.pi)


def test_catalog_names_and_order():
    assert [a.name for a in catalog()] == ACTION_NAMES


def test_catalog_invariants():
    for a in catalog():
        assert a.name == a.name.lower()
        assert a.description
        assert a.duration_s > 0
        for seg in a.segments:
            assert abs(seg.v_left) <= V_MAX and abs(seg.v_right) <= V_MAX


def test_action_by_name_is_case_sensitive():
    assert action_by_name("idle").name == "idle"
    with pytest.raises(UnknownAction):
        action_by_name("Idle")
    with pytest.raises(UnknownAction):
        action_by_name("moonwalk")


# -- closed form vs an independent Euler integration ------------------------


@pytest.mark.parametrize("name", ACTION_NAMES)
def test_final_pose_matches_euler_oracle(name):
    action = action_by_name(name)
    got = synthesize(action).final_pose
    ex, ey, etheta = euler_final_pose(action, DEFAULT_WHEELBASE_M)
    assert got.x == pytest.approx(ex, abs=1e-3)
    assert got.y == pytest.approx(ey, abs=1e-3)
    assert abs(wrapped(got.theta - etheta)) < 1e-3


def test_pinned_finals():
    # approach: 0.15 m/s straight for 2 s
    p = synthesize(action_by_name("approach")).final_pose
    assert (p.x, p.y, p.theta) == pytest.approx((0.3, 0.0, 0.0), abs=1e-12)
    p = synthesize(action_by_name("retreat")).final_pose
    assert (p.x, p.y, p.theta) == pytest.approx((-0.3, 0.0, 0.0), abs=1e-12)
    # spin_left: w = (0.1 - -0.1) / 0.2 = 1 rad/s for 2 s
    p = synthesize(action_by_name("spin_left")).final_pose
    assert (p.x, p.y, p.theta) == pytest.approx((0.0, 0.0, 2.0), abs=1e-12)
    p = synthesize(action_by_name("spin_right")).final_pose
    assert (p.x, p.y, p.theta) == pytest.approx((0.0, 0.0, -2.0), abs=1e-12)


@pytest.mark.parametrize("name", ["spin_left", "spin_right", "tremble", "sway"])
def test_in_place_actions_return_to_origin(name):
    p = synthesize(action_by_name(name)).final_pose
    assert math.hypot(p.x, p.y) < 1e-6


def test_final_pose_independent_of_sampling_step():
    for name in ("circle_cw", "sway"):
        action = action_by_name(name)
        finals = [synthesize(action, dt_s=dt).final_pose for dt in (0.05, 0.02, 0.01)]
        for p in finals[1:]:
            assert p.x == pytest.approx(finals[0].x, abs=1e-12)
            assert p.y == pytest.approx(finals[0].y, abs=1e-12)
            assert abs(wrapped(p.theta - finals[0].theta)) < 1e-12


@st.composite
def wheel_profiles(draw):
    n = draw(st.integers(min_value=1, max_value=4))
    speeds = st.floats(min_value=-V_MAX, max_value=V_MAX, allow_nan=False)
    segs = tuple(
        WheelSegment(
            draw(speeds),
            draw(speeds),
            draw(st.floats(min_value=0.05, max_value=2.0, allow_nan=False)),
        )
        for _ in range(n)
    )
    return AtomicAction("probe", "test profile", segs)


@settings(max_examples=40, deadline=None)
@given(wheel_profiles())
def test_swapping_wheels_mirrors_the_trajectory(action):
    mirrored = AtomicAction(
        "probe_m",
        action.description,
        tuple(WheelSegment(s.v_right, s.v_left, s.duration_s) for s in action.segments),
    )
    a = synthesize(action).final_pose
    b = synthesize(mirrored).final_pose
    assert b.x == pytest.approx(a.x, abs=1e-9)
    assert b.y == pytest.approx(-a.y, abs=1e-9)
    assert abs(wrapped(a.theta + b.theta)) < 1e-9


# -- trajectory container ----------------------------------------------------


def test_samples_include_off_grid_segment_boundaries():
    traj = synthesize(action_by_name("sway"), dt_s=0.04)  # 0.7 s is not on the grid
    times = [t for t, _ in traj.samples]
    for boundary in (0.7, 1.4, 2.1):
        assert any(abs(t - boundary) < 1e-9 for t in times)
    assert times[0] == 0.0
    assert times[-1] == pytest.approx(traj.duration_s)


def test_pose_at_clamps_and_interpolates():
    traj = synthesize(action_by_name("approach"))
    assert traj.pose_at(-1.0) == traj.samples[0][1]
    assert traj.pose_at(99.0) == traj.final_pose
    mid = traj.pose_at(1.0)
    assert (mid.x, mid.y, mid.theta) == pytest.approx((0.15, 0.0, 0.0), abs=1e-9)
    # off-sample query on a straight line is exact
    q = traj.pose_at(0.013)
    assert q.x == pytest.approx(0.15 * 0.013, abs=1e-9)


def test_trajectory_validation():
    p = Pose(0.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        MotionTrajectory("x", ())
    with pytest.raises(ValueError):
        MotionTrajectory("x", ((0.5, p),))
    with pytest.raises(ValueError):
        MotionTrajectory("x", ((0.0, p), (0.0, p)))


def test_pose_make_wraps_theta():
    assert Pose.make(0, 0, 3 * math.pi).theta == pytest.approx(math.pi)
    assert Pose.make(0, 0, -math.pi).theta == pytest.approx(math.pi)
    assert Pose.make(0, 0, 0.3).theta == pytest.approx(0.3)


def test_synthesize_rejects_bad_parameters():
    idle = action_by_name("idle")
    with pytest.raises(ParameterError):
        synthesize(idle, wheelbase_m=0.0)
    with pytest.raises(ParameterError):
        synthesize(idle, wheelbase_m=-0.2)
    for dt in (0.0, -0.01, 0.051):
        with pytest.raises(ParameterError):
            synthesize(idle, dt_s=dt)


def test_action_validation():
    with pytest.raises(TableError):
        AtomicAction("x", "no segments", ())
    with pytest.raises(TableError):
        AtomicAction("x", "zero dur", (WheelSegment(0.1, 0.1, 0.0),))
    with pytest.raises(TableError):
        AtomicAction("x", "too fast", (WheelSegment(0.31, 0.0, 1.0),))


# -- catalog files -----------------------------------------------------------


def _write_catalog(tmp_path, body: str):
    path = tmp_path / "catalog.tsv"
    path.write_text("[catalog]\n" + body, encoding="utf-8")
    return path


def test_load_catalog(tmp_path):
    path = _write_catalog(
        tmp_path,
        "wiggle\tSmall wiggle.\t0.1:-0.1:0.2,-0.1:0.1:0.2\n"
        "creep\tSlow creep.\t0.05:0.05:1.5\n",
    )
    actions = load_catalog(path)
    assert [a.name for a in actions] == ["wiggle", "creep"]
    assert actions[0].segments[0] == WheelSegment(0.1, -0.1, 0.2)
    assert actions[1].duration_s == pytest.approx(1.5)


def test_load_catalog_rejects_duplicates(tmp_path):
    path = _write_catalog(tmp_path, "a\td\t0.1:0.1:1\na\td\t0.1:0.1:1\n")
    with pytest.raises(TableError):
        load_catalog(path)


def test_load_catalog_rejects_malformed_segments(tmp_path):
    with pytest.raises(FormatError):
        load_catalog(_write_catalog(tmp_path, "a\td\t0.1:0.1\n"))
    with pytest.raises(FormatError):
        load_catalog(_write_catalog(tmp_path, "a\td\t0.1:x:1\n"))
    with pytest.raises(FormatError):
        load_catalog(_write_catalog(tmp_path, "a\td\n"))


def test_load_catalog_requires_section(tmp_path):
    path = tmp_path / "other.tsv"
    path.write_text("[something]\na\tb\n", encoding="utf-8")
    with pytest.raises(FormatError):
        load_catalog(path)


def test_load_catalog_applies_speed_bound(tmp_path):
    with pytest.raises(TableError):
        load_catalog(_write_catalog(tmp_path, "a\td\t0.4:0.1:1\n"))
