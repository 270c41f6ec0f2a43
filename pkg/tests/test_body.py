import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vantage.body import (
    HeadJoints,
    JointLimits,
    body_z_range,
    clamp_to_limits,
    eye_point,
    gaze_angles_for,
    manikin_limits,
    misalignment,
    robot_limits,
    target_direction,
    vision_axis,
    world_footprint,
)
from vantage.errors import DegenerateDirectionError, InputError

from conftest import make_body, make_scene


def rotation_oracle(axis_angles):
    """Rz(theta_m + theta_b) @ Ry(-alpha) @ x_hat via explicit matrices."""
    theta, alpha = axis_angles
    ry = np.array([
        [math.cos(-alpha), 0, math.sin(-alpha)],
        [0, 1, 0],
        [-math.sin(-alpha), 0, math.cos(-alpha)],
    ])
    rz = np.array([
        [math.cos(theta), -math.sin(theta), 0],
        [math.sin(theta), math.cos(theta), 0],
        [0, 0, 1],
    ])
    return rz @ ry @ np.array([1.0, 0.0, 0.0])


# ---------------------------------------------------------------------------
# eye point

def test_eye_point_forward_offset():
    state = make_body(eye_forward_offset=0.1, eye_height=1.6)
    assert eye_point(state) == pytest.approx((0.1, 0.0, 1.6))


def test_eye_point_rotated_quarter_turn():
    state = make_body(theta=math.pi / 2, eye_forward_offset=0.1, eye_height=1.6)
    assert eye_point(state) == pytest.approx((0.0, 0.1, 1.6), abs=1e-15)


def test_eye_point_zero_offset_any_heading():
    for theta in (0.0, 0.7, -2.1, 3.0):
        state = make_body(x=2.0, y=-1.0, theta=theta, eye_forward_offset=0.0)
        assert eye_point(state) == pytest.approx((2.0, -1.0, 1.6))


# ---------------------------------------------------------------------------
# vision axis

def test_vision_axis_neutral():
    assert vision_axis(make_body()) == pytest.approx((1.0, 0.0, 0.0))


def test_vision_axis_quarter_turn_trunk():
    state = make_body(theta=math.pi / 2)
    assert vision_axis(state) == pytest.approx((0.0, 1.0, 0.0), abs=1e-15)


def test_vision_axis_pitch_matches_matrix_oracle():
    state = make_body(alpha=math.pi / 4)
    got = vision_axis(state)
    assert got == pytest.approx((math.sqrt(2) / 2, 0.0, math.sqrt(2) / 2), abs=1e-12)
    assert got == pytest.approx(tuple(rotation_oracle((0.0, math.pi / 4))), abs=1e-12)


@given(st.floats(-3, 3), st.floats(-0.75, 0.75), st.floats(-1.0, 1.0))
@settings(max_examples=200, deadline=None)
def test_vision_axis_against_matrix_oracle(theta_m, alpha, theta_b):
    state = make_body(theta=theta_m, alpha=alpha, head_theta=theta_b,
                      joint_limits=JointLimits((-1, 1), (-1, 1), (-1.1, 1.1)))
    got = np.array(vision_axis(state))
    ref = rotation_oracle((theta_m + theta_b, alpha))
    assert np.allclose(got, ref, atol=1e-12)
    assert math.sqrt(float(np.dot(got, got))) == pytest.approx(1.0, abs=1e-12)


def test_beta_has_no_effect_on_axis_eye_or_misalignment():
    scene = make_scene(target=(2.0, 1.0, 1.2))
    limits = manikin_limits()
    outs = []
    for beta in (limits.beta[0], 0.0, limits.beta[1]):
        state = make_body(alpha=0.3, beta=beta, head_theta=-0.4)
        outs.append((vision_axis(state), eye_point(state), misalignment(state, scene)))
    assert outs[0] == outs[1] == outs[2]  # bitwise equal


# ---------------------------------------------------------------------------
# target direction and misalignment

def test_target_direction_horizontal():
    scene = make_scene(target=(1.0, 0.0, 1.6))
    state = make_body(eye_forward_offset=0.0)
    assert target_direction(state, scene) == pytest.approx((1.0, 0.0, 0.0))


def test_target_direction_straight_up():
    scene = make_scene(target=(0.0, 0.0, 3.6))
    state = make_body(eye_forward_offset=0.0)
    assert target_direction(state, scene) == pytest.approx((0.0, 0.0, 1.0))


def test_target_direction_degenerate_raises():
    scene = make_scene(target=(0.0, 0.0, 1.6))
    state = make_body(eye_forward_offset=0.0)
    with pytest.raises(DegenerateDirectionError):
        target_direction(state, scene)


def test_misalignment_extremes():
    state = make_body(eye_forward_offset=0.0)  # axis (1, 0, 0)
    assert misalignment(state, make_scene(target=(2.0, 0.0, 1.6))) == 0.0
    assert misalignment(state, make_scene(target=(0.0, 2.0, 1.6))) == pytest.approx(math.pi / 2)
    assert misalignment(state, make_scene(target=(-2.0, 0.0, 1.6))) == pytest.approx(math.pi)


def test_misalignment_zero_after_exact_gaze_angles():
    scene = make_scene(target=(1.4, 0.8, 2.1))
    state = make_body(x=0.2, y=-0.3, theta=0.4)
    alpha, theta_b = gaze_angles_for(state, scene.target)
    limits = state.joint_limits
    assert limits.alpha[0] < alpha < limits.alpha[1]
    assert limits.theta[0] < theta_b < limits.theta[1]
    aligned = make_body(x=0.2, y=-0.3, theta=0.4, alpha=alpha, head_theta=theta_b)
    # acos amplifies last-ulp dot errors to ~sqrt(eps); 1e-7 is the floor
    assert misalignment(aligned, scene) < 1e-7


# ---------------------------------------------------------------------------
# joint limits

def test_clamp_passes_in_range_joints():
    limits = manikin_limits()
    head = HeadJoints(alpha=0.1, beta=-0.2, theta=0.5)
    assert clamp_to_limits(head, limits) == head


def test_clamp_clips_yaw():
    limits = JointLimits(alpha=(-0.8, 0.8), beta=(-0.7, 0.7), theta=(-1.047, 1.047))
    clamped = clamp_to_limits(HeadJoints(theta=2.0), limits)
    assert clamped.theta == 1.047


@given(st.floats(-4, 4), st.floats(-4, 4), st.floats(-4, 4))
@settings(max_examples=100, deadline=None)
def test_clamp_idempotent(alpha, beta, theta):
    limits = manikin_limits()
    once = clamp_to_limits(HeadJoints(alpha, beta, theta), limits)
    assert clamp_to_limits(once, limits) == once


def test_joint_limits_validation():
    with pytest.raises(InputError):
        JointLimits(alpha=(0.5, 0.1), beta=(-1, 1), theta=(-1, 1))
    with pytest.raises(InputError):
        JointLimits(alpha=(0.2, 0.5), beta=(-1, 1), theta=(-1, 1))  # 0 not inside
    # the camera-mast roll joint is pinned at zero
    assert robot_limits().beta == (0.0, 0.0)


def test_body_state_rejects_out_of_limit_head():
    with pytest.raises(InputError):
        make_body(head_theta=2.0)
    with pytest.raises(InputError):
        make_body(cone=10.0)


# ---------------------------------------------------------------------------
# world footprint

def test_world_footprint_identity_pose():
    state = make_body()
    assert world_footprint(state) == state.footprint


def test_world_footprint_translation():
    state = make_body(x=1.5, y=-2.0)
    expected = tuple((x + 1.5, y - 2.0) for x, y in state.footprint)
    for g, e in zip(world_footprint(state), expected):
        assert g == pytest.approx(e, abs=1e-15)


def test_world_footprint_half_turn_point_reflects():
    state = make_body(x=1.0, y=1.0, theta=math.pi)
    got = world_footprint(state)
    # 2D transform oracle: p' = R(pi) p + t = -p + t
    expected = [(1.0 - x, 1.0 - y) for x, y in state.footprint]
    for g, e in zip(got, expected):
        assert g == pytest.approx(e, abs=1e-12)


@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(-math.pi, math.pi))
@settings(max_examples=200, deadline=None)
def test_world_footprint_is_rigid(x, y, theta):
    state = make_body(x=x, y=y, theta=theta)
    local, world = state.footprint, world_footprint(state)

    def edge_lengths(poly):
        return [math.dist(poly[i], poly[(i + 1) % len(poly)]) for i in range(len(poly))]

    def shoelace(poly):
        return 0.5 * abs(sum(
            poly[i][0] * poly[(i + 1) % len(poly)][1]
            - poly[(i + 1) % len(poly)][0] * poly[i][1]
            for i in range(len(poly))))

    for a, b in zip(edge_lengths(local), edge_lengths(world)):
        assert b == pytest.approx(a, rel=1e-9)
    assert shoelace(world) == pytest.approx(shoelace(local), rel=1e-9)


def test_body_z_range_spans_floor_to_eye():
    assert body_z_range(make_body(eye_height=1.75)) == (0.0, 1.75)


def test_gaze_angles_keep_yaw_when_aim_overhead():
    state = make_body(head_theta=0.5, eye_forward_offset=0.0)
    alpha, theta_b = gaze_angles_for(state, (0.0, 0.0, 5.0))
    assert alpha == pytest.approx(math.pi / 2)
    assert theta_b == 0.5
