import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vantage.blackboard import Blackboard, normalize, state_digest
from vantage.blackboard_types import Contribution, NormalizationConstants
from vantage.errors import InputError, ProtocolError

from conftest import make_body, make_scene

K = NormalizationConstants(delta_pos=0.05, delta_or=0.02)

finite = st.floats(allow_nan=False, allow_infinity=False, min_value=-1e6, max_value=1e6)


def board_with(agents=("a", "b")) -> Blackboard:
    return Blackboard(body=make_body(), scene=make_scene(), agent_ids=agents)


# ---------------------------------------------------------------------------
# normalize

def test_normalize_rescales_translation_to_delta_pos():
    c = normalize(Contribution(agent_id="a", d_xy=(3.0, 4.0)), K)
    assert c.d_xy == pytest.approx((0.03, 0.04), abs=1e-15)
    assert math.hypot(*c.d_xy) == pytest.approx(K.delta_pos, abs=1e-15)


def test_normalize_zero_stays_zero():
    c = normalize(Contribution(agent_id="a"), K)
    assert c.is_zero()


def test_normalize_clamps_rotation_preserving_sign():
    c = normalize(Contribution(agent_id="a", d_theta=-0.5), K)
    assert c.d_theta == -0.02
    c2 = normalize(Contribution(agent_id="a", d_theta=0.004), K)
    assert c2.d_theta == 0.004  # within the band: untouched


def test_normalize_clamps_head_and_cone():
    c = normalize(Contribution(agent_id="a", d_head=(1.0, -1.0), d_cone=0.3), K)
    assert c.d_head == (0.02, -0.02)
    assert c.d_cone == 0.02


def test_normalize_dead_band():
    c = normalize(Contribution(agent_id="a", d_xy=(1e-10, -1e-10)), K)
    assert c.d_xy == (0.0, 0.0)


def test_normalize_rejects_non_finite():
    with pytest.raises(InputError):
        normalize(Contribution(agent_id="a", d_xy=(float("nan"), 0.0)), K)


@given(finite, finite, finite, finite, finite, finite)
@settings(max_examples=300, deadline=None)
def test_normalize_idempotent(dx, dy, dth, da, dht, dc):
    c = Contribution(agent_id="a", d_xy=(dx, dy), d_theta=dth, d_head=(da, dht), d_cone=dc)
    once = normalize(c, K)
    twice = normalize(once, K)
    assert twice == once  # bitwise


@given(finite, finite)
@settings(max_examples=300, deadline=None)
def test_normalize_translation_magnitude_is_zero_or_delta_pos(dx, dy):
    c = normalize(Contribution(agent_id="a", d_xy=(dx, dy)), K)
    mag = math.hypot(*c.d_xy)
    assert mag == 0.0 or mag == pytest.approx(K.delta_pos, rel=1e-12)


# ---------------------------------------------------------------------------
# apply

def test_apply_empty_batch_only_advances_tick():
    board = board_with()
    before = board.snapshot()
    after = board.apply([])
    assert after.tick == before.tick + 1
    assert after.body == before.body


def test_apply_single_translation():
    board = board_with()
    c = Contribution(agent_id="a", d_xy=(0.05, 0.0), tick=0)
    after = board.apply([c])
    assert after.body.trunk.x == pytest.approx(0.05)
    assert after.body.trunk.y == 0.0


def test_apply_opposite_translations_cancel():
    board = board_with()
    cs = [
        Contribution(agent_id="a", d_xy=(0.05, 0.0), tick=0),
        Contribution(agent_id="b", d_xy=(-0.05, 0.0), tick=0),
    ]
    after = board.apply(cs)
    assert after.body.trunk.x == 0.0


def test_apply_rejects_unknown_agent():
    board = board_with(("a",))
    with pytest.raises(ProtocolError):
        board.apply([Contribution(agent_id="ghost", tick=0)])


def test_apply_rejects_wrong_tick():
    board = board_with()
    with pytest.raises(ProtocolError):
        board.apply([Contribution(agent_id="a", tick=5)])


def test_apply_clamps_head_joints_and_cone():
    board = board_with()
    limits = board.snapshot().body.joint_limits
    big = Contribution(agent_id="a", d_head=(2.0, -3.0), d_cone=1.0, tick=0)
    after = board.apply([big])
    assert after.body.head.alpha == limits.alpha[1]
    assert after.body.head.theta == limits.theta[0]
    assert after.body.cone_half_angle == after.body.cone_limits[1]
    # beta untouched by contributions
    assert after.body.head.beta == 0.0


def test_apply_normalizes_theta_into_range():
    board = board_with()
    state = board.snapshot()
    for k in range(80):
        state = board.apply([Contribution(agent_id="a", d_theta=0.1, tick=state.tick)])
        assert -math.pi < state.body.trunk.theta <= math.pi


def test_apply_permutation_invariant():
    rng = random.Random(11)
    contributions = [
        Contribution(agent_id="a", d_xy=(0.013, -0.007), d_theta=0.011,
                     d_head=(0.004, -0.009), d_cone=0.002, tick=0),
        Contribution(agent_id="b", d_xy=(-0.031, 0.002), d_theta=-0.017,
                     d_head=(-0.001, 0.016), d_cone=-0.005, tick=0),
        Contribution(agent_id="c", d_xy=(0.008, 0.021), d_theta=0.003,
                     d_head=(0.012, 0.001), d_cone=0.001, tick=0),
        Contribution(agent_id="d", d_xy=(0.001, -0.044), d_theta=-0.002,
                     d_head=(-0.008, -0.013), d_cone=0.004, tick=0),
    ]
    base = None
    for _ in range(30):
        batch = contributions[:]
        rng.shuffle(batch)
        board = board_with(("a", "b", "c", "d"))
        state = board.apply(batch)
        digest = state_digest(state)
        if base is None:
            base = digest
        assert digest == base  # bitwise identical states for any order


def test_body_invariants_hold_after_random_applies():
    rng = random.Random(5)
    board = board_with()
    state = board.snapshot()
    for _ in range(200):
        batch = [
            normalize(Contribution(
                agent_id="a",
                d_xy=(rng.uniform(-1, 1), rng.uniform(-1, 1)),
                d_theta=rng.uniform(-1, 1),
                d_head=(rng.uniform(-1, 1), rng.uniform(-1, 1)),
                d_cone=rng.uniform(-1, 1),
                tick=state.tick,
            ), K)
        ]
        state = board.apply(batch)
        b = state.body
        assert b.joint_limits.alpha[0] <= b.head.alpha <= b.joint_limits.alpha[1]
        assert b.joint_limits.theta[0] <= b.head.theta <= b.joint_limits.theta[1]
        assert b.cone_limits[0] <= b.cone_half_angle <= b.cone_limits[1]
        assert -math.pi < b.trunk.theta <= math.pi


# ---------------------------------------------------------------------------
# snapshots and intermediate target

def test_snapshot_is_initial_state_before_any_apply():
    board = board_with()
    s = board.snapshot()
    assert s.tick == 0
    assert s.intermediate_target is None


def test_snapshots_without_apply_are_identical():
    board = board_with()
    assert board.snapshot() is board.snapshot()


def test_snapshot_immune_to_later_applies():
    board = board_with()
    before = board.snapshot()
    board.apply([Contribution(agent_id="a", d_xy=(0.05, 0), tick=0)])
    assert before.body.trunk.x == 0.0  # old snapshot untouched


def test_set_intermediate_target_roundtrip():
    board = board_with()
    board.set_intermediate_target((1.0, 2.0, 0.5))
    assert board.snapshot().intermediate_target == (1.0, 2.0, 0.5)
    assert board.snapshot().aim_point() == (1.0, 2.0, 0.5)
    board.set_intermediate_target(None)
    assert board.snapshot().intermediate_target is None
    assert board.snapshot().aim_point() == board.scene.target


def test_intermediate_target_equal_to_scene_target_behaves_as_cleared():
    board = board_with()
    board.set_intermediate_target(board.scene.target)
    assert board.snapshot().aim_point() == board.scene.target


def test_digest_stable_and_sensitive():
    board = board_with()
    d0 = state_digest(board.snapshot())
    assert d0 == state_digest(board.snapshot())
    after = board.apply([Contribution(agent_id="a", d_xy=(0.05, 0.0), tick=0)])
    assert state_digest(after) != d0
    # tick alone does not change the digest (stall detection relies on it)
    still = board.apply([])
    assert state_digest(still) == state_digest(after)
