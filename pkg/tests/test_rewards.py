import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stepup.env import (
    reward_face_goal,
    reward_pos_bias,
    reward_position,
    reward_stall,
    shaping_rewards,
)

T, T_R = 6.0, 2.0


def brute_position(pos, goal, t):
    if t <= T - T_R:
        return 0.0
    d2 = float((np.subtract(pos, goal) ** 2).sum())
    return (1.0 / T_R) * 1.0 / (1.0 + d2)


def brute_pos_bias(vel, pos, goal):
    vel = np.asarray(vel, float)
    to_goal = np.subtract(goal, pos).astype(float)
    nv, ng = np.linalg.norm(vel), np.linalg.norm(to_goal)
    if nv < 1e-6 or ng < 1e-6:
        return 0.0
    return float(vel @ to_goal / (nv * ng))


def brute_stall(vel, pos, goal):
    speed = np.linalg.norm(np.asarray(vel, float))
    dist = np.linalg.norm(np.subtract(goal, pos).astype(float))
    return -1.0 if (speed < 0.1 and dist > 0.5) else 0.0


def brute_face_goal(heading, heading_goal, pos, goal):
    dist = np.linalg.norm(np.subtract(goal, pos).astype(float))
    return -abs(heading - heading_goal) if dist > 0.5 else 0.0


class TestOracles:
    """Each operation against an independent brute-force evaluation."""

    def test_position_matches_brute_force_on_randomized_inputs(self):
        rng = np.random.default_rng(0)
        for _ in range(150):
            pos = rng.uniform(-3, 3, 2)
            goal = rng.uniform(-3, 3, 2)
            t = rng.uniform(0, T)
            got = float(reward_position(pos, goal, t, T, T_R))
            assert got == pytest.approx(brute_position(pos, goal, t), abs=1e-10)

    def test_pos_bias_matches_brute_force_on_randomized_inputs(self):
        rng = np.random.default_rng(1)
        for _ in range(150):
            vel = rng.uniform(-2, 2, 2)
            pos = rng.uniform(-3, 3, 2)
            goal = rng.uniform(-3, 3, 2)
            got = float(reward_pos_bias(vel, pos, goal))
            assert got == pytest.approx(brute_pos_bias(vel, pos, goal), abs=1e-10)

    def test_stall_matches_brute_force_on_randomized_inputs(self):
        rng = np.random.default_rng(2)
        for _ in range(150):
            vel = rng.uniform(-0.3, 0.3, 2)
            pos = rng.uniform(-1, 1, 2)
            goal = rng.uniform(-1, 1, 2)
            got = float(reward_stall(vel, pos, goal))
            assert got == pytest.approx(brute_stall(vel, pos, goal), abs=1e-10)

    def test_face_goal_matches_brute_force_on_randomized_inputs(self):
        rng = np.random.default_rng(3)
        for _ in range(150):
            heading = rng.uniform(-np.pi, np.pi)
            heading_goal = rng.uniform(-np.pi, np.pi)
            pos = rng.uniform(-1, 1, 2)
            goal = rng.uniform(-1, 1, 2)
            got = float(reward_face_goal(heading, heading_goal, pos, goal))
            assert got == pytest.approx(
                brute_face_goal(heading, heading_goal, pos, goal), abs=1e-10)


class TestPositionExamples:
    def test_at_goal_late_in_episode(self):
        assert float(reward_position([1, 1], [1, 1], 5.0, T, T_R)) == pytest.approx(0.5)

    def test_zero_before_terminal_window(self):
        assert float(reward_position([1, 1], [1, 1], 3.0, T, T_R)) == 0.0

    def test_gate_is_exact_at_the_boundary(self):
        assert float(reward_position([0, 0], [0, 0], 4.0, T, T_R)) == 0.0
        assert float(reward_position([0, 0], [0, 0], 4.0 + 1e-9, T, T_R)) > 0.0

    def test_unit_distance_value(self):
        assert float(reward_position([0, 0], [1, 0], 5.5, T, T_R)) == pytest.approx(0.25)

    def test_invalid_window_rejected(self):
        with pytest.raises(ValueError):
            reward_position([0, 0], [0, 0], 1.0, 6.0, 6.0)


class TestPosBiasExamples:
    def test_parallel_velocity_is_one(self):
        assert float(reward_pos_bias([0.5, 0], [0, 0], [2, 0])) == pytest.approx(1.0)

    def test_perpendicular_velocity_is_zero(self):
        assert float(reward_pos_bias([0, 0.5], [0, 0], [2, 0])) == pytest.approx(0.0)

    def test_antiparallel_velocity_is_minus_one(self):
        assert float(reward_pos_bias([-0.5, 0], [0, 0], [2, 0])) == pytest.approx(-1.0)

    def test_degenerate_velocity_is_zero(self):
        assert float(reward_pos_bias([0, 0], [0, 0], [2, 0])) == 0.0

    def test_degenerate_goal_distance_is_zero(self):
        assert float(reward_pos_bias([1, 0], [2, 0], [2, 0])) == 0.0


class TestStallExamples:
    def test_slow_and_far_penalized(self):
        assert float(reward_stall([0.05, 0], [0, 0], [1, 0])) == -1.0

    def test_slow_but_close_not_penalized(self):
        assert float(reward_stall([0.05, 0], [0, 0], [0.3, 0])) == 0.0

    def test_fast_not_penalized(self):
        assert float(reward_stall([0.5, 0], [0, 0], [1, 0])) == 0.0


class TestFaceGoalExamples:
    def test_heading_error_far_from_goal(self):
        assert float(reward_face_goal(0.3, 0.0, [0, 0], [1, 0])) == pytest.approx(-0.3)

    def test_gated_off_near_goal(self):
        assert float(reward_face_goal(0.3, 0.0, [0, 0], [0.3, 0])) == 0.0

    def test_zero_error_is_zero(self):
        assert float(reward_face_goal(0.7, 0.7, [0, 0], [1, 0])) == 0.0


class TestBounds:
    @given(st.floats(-5, 5), st.floats(-5, 5), st.floats(0, 6))
    @settings(max_examples=300, deadline=None)
    def test_position_bounds(self, px, gx, t):
        r = float(reward_position([px, 0.2], [gx, -0.1], t, T, T_R))
        assert 0.0 <= r <= 0.5

    @given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3))
    @settings(max_examples=300, deadline=None)
    def test_pos_bias_bounds(self, vx, vz, px, gx):
        r = float(reward_pos_bias([vx, vz], [px, 0], [gx, 1]))
        assert -1.0 - 1e-12 <= r <= 1.0 + 1e-12

    @given(st.floats(-1, 1), st.floats(-1, 1), st.floats(-2, 2))
    @settings(max_examples=300, deadline=None)
    def test_stall_is_binary(self, vx, px, gx):
        assert float(reward_stall([vx, 0], [px, 0], [gx, 0])) in (-1.0, 0.0)

    @given(st.floats(-np.pi, np.pi), st.floats(-2, 2))
    @settings(max_examples=300, deadline=None)
    def test_face_goal_nonpositive(self, heading, gx):
        assert float(reward_face_goal(heading, 0.0, [0, 0], [gx, 0])) <= 0.0


class TestShaping:
    def test_static_repeated_action_gives_zero_penalties(self):
        qd = np.zeros(6)
        a = np.full(6, 0.3)
        terms = shaping_rewards(qd, qd, a, a, np.zeros(6), 0.0, 0.02)
        assert all(v == 0.0 for v in terms.values())

    def test_velocity_jump_acceleration_penalty(self):
        # 1 rad/s change on one joint over a 20 ms tick: (1/0.02)^2 = 2500
        qd = np.array([1.0, 0, 0, 0, 0, 0])
        terms = shaping_rewards(qd, np.zeros(6), np.zeros(6), np.zeros(6),
                                np.zeros(6), 0.0, 0.02)
        assert terms["joint_acc"] == pytest.approx(-2500.0)

    def test_orientation_and_torque_terms(self):
        terms = shaping_rewards(np.zeros(6), np.zeros(6), np.zeros(6),
                                np.zeros(6), np.full(6, 2.0), 0.3, 0.02)
        assert terms["torque"] == pytest.approx(-24.0)
        assert terms["orientation"] == pytest.approx(-0.09)

    def test_action_rate_term(self):
        a = np.array([1.0, -1.0, 0, 0, 0.5, 0])
        terms = shaping_rewards(np.zeros(6), np.zeros(6), a, np.zeros(6),
                                np.zeros(6), 0.0, 0.02)
        assert terms["action_rate"] == pytest.approx(-(1 + 1 + 0.25))
