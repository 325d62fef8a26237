"""Closed-loop chain construction: ordering, limits, and rule fidelity."""

from __future__ import annotations

import json

import numpy as np
import pytest

from prunecheck import (
    BuildLimits,
    Distribution,
    EnvironmentModel,
    LimitExceededError,
    ModelSemanticError,
    SchemaMismatchError,
    avoidance,
    build_induced_dtmc,
    induced_to_explicit,
    load_explicit_model,
    make_policy,
    mini_taxi,
)
from prunecheck.environments import AVOIDANCE_ACTIONS, AVOIDANCE_FEATURES, TAXI_ACTIONS, TAXI_FEATURES

from .conftest import random_policy
from .oracles import (
    argmax_in_schema,
    avoid_induced_chain,
    closure,
    linear_logits,
    taxi_actions,
    taxi_step,
)


def branching_env(rows: dict, initial=(0,)) -> EnvironmentModel:
    """One-action environment whose successor rows are given literally."""
    return EnvironmentModel(
        feature_schema=("pos",),
        action_schema=("step",),
        initial=initial,
        available_actions=lambda s: ("step",) if s in rows else (),
        successors=lambda s, a: Distribution(tuple(rows[s])),
        labels=lambda s: frozenset(),
    )


# ===== Fixture chains =====


class TestFixtureChains:
    def test_chain3_rebuilds_exactly(self, chain3_env, chain3, step_policy):
        result = build_induced_dtmc(chain3_env, step_policy)
        assert result.dtmc.state_vectors == chain3.state_vectors
        assert result.dtmc.state_labels == chain3.state_labels
        assert result.dtmc.rows == chain3.rows

    def test_loop_rebuilds_exactly(self, loop_env, loop, step_policy):
        result = build_induced_dtmc(loop_env, step_policy)
        assert result.dtmc.rows == loop.rows

    def test_two_coin_rebuilds_exactly(self, two_coin_env, two_coin, step_policy):
        result = build_induced_dtmc(two_coin_env, step_policy)
        assert result.dtmc.state_vectors == two_coin.state_vectors
        assert result.dtmc.rows == two_coin.rows

    def test_chosen_actions_and_stats(self, chain3_env, step_policy):
        result = build_induced_dtmc(chain3_env, step_policy)
        assert result.chosen_actions == ("step", "step", "step")
        assert result.stats.states == result.dtmc.num_states == 3
        assert result.stats.transitions == result.dtmc.num_transitions == 4
        assert result.stats.duration_ms >= 0.0

    def test_state_index_matches_vector_order(self, two_coin_env, step_policy):
        result = build_induced_dtmc(two_coin_env, step_policy)
        for vector, i in result.state_index.items():
            assert result.dtmc.state_vectors[i] == vector
        assert len(result.state_index) == result.dtmc.num_states


# ===== Discovery order =====


class TestDiscoveryOrder:
    def test_breadth_first_not_depth_first(self, step_policy):
        env = branching_env(
            {
                (0,): [((1,), 0.5), ((2,), 0.5)],
                (1,): [((3,), 1.0)],
                (2,): [((3,), 1.0)],
                (3,): [((3,), 1.0)],
            }
        )
        result = build_induced_dtmc(env, step_policy)
        # Depth-first would visit (3,) before (2,).
        assert result.dtmc.state_vectors == ((0,), (1,), (2,), (3,))

    def test_numbering_follows_row_mention_order(self, step_policy):
        env = branching_env(
            {
                (0,): [((2,), 0.5), ((1,), 0.5)],
                (1,): [((1,), 1.0)],
                (2,): [((2,), 1.0)],
            }
        )
        result = build_induced_dtmc(env, step_policy)
        assert result.dtmc.state_vectors == ((0,), (2,), (1,))
        assert result.state_index == {(0,): 0, (2,): 1, (1,): 2}

    def test_rebuild_is_deterministic(self, step_policy):
        env = avoidance()
        policy = random_policy(9, AVOIDANCE_FEATURES, AVOIDANCE_ACTIONS, hidden=(6,))
        first = build_induced_dtmc(env, policy)
        second = build_induced_dtmc(env, policy)
        assert first.dtmc.state_vectors == second.dtmc.state_vectors
        assert first.dtmc.rows == second.dtmc.rows
        assert first.chosen_actions == second.chosen_actions


# ===== Failure modes =====


class TestFailureModes:
    def test_reachable_deadlock_raises(self, step_policy):
        env = branching_env({(0,): [((1,), 1.0)]})
        with pytest.raises(ModelSemanticError, match=r"deadlock at state \[1\]"):
            build_induced_dtmc(env, step_policy)

    def test_schema_mismatch_raises(self, chain3_env):
        policy = make_policy(("x", "y"), ("step",), [(np.zeros((1, 2)), np.zeros(1))])
        with pytest.raises(SchemaMismatchError):
            build_induced_dtmc(chain3_env, policy)

    def test_state_cap(self, chain3_env, step_policy):
        with pytest.raises(LimitExceededError, match="max_states=2") as exc:
            build_induced_dtmc(chain3_env, step_policy, BuildLimits(max_states=2))
        assert exc.value.exit_code == 4
        assert exc.value.states_seen == 2
        assert exc.value.transitions_seen == 2

    def test_transition_cap(self, chain3_env, step_policy):
        with pytest.raises(LimitExceededError, match="max_transitions=3") as exc:
            build_induced_dtmc(chain3_env, step_policy, BuildLimits(max_transitions=3))
        assert exc.value.states_seen == 3
        assert exc.value.transitions_seen == 4

    def test_exact_fit_passes(self, chain3_env, step_policy):
        limits = BuildLimits(max_states=3, max_transitions=4)
        result = build_induced_dtmc(chain3_env, step_policy, limits)
        assert result.stats.states == 3
        assert result.stats.transitions == 4


# ===== Rule fidelity =====


class TestAvoidanceFidelity:
    @pytest.mark.parametrize("seed", [0, 1, 2, 3, 4])
    def test_matches_rewritten_rules(self, seed):
        env = avoidance()
        policy = random_policy(seed, AVOIDANCE_FEATURES, AVOIDANCE_ACTIONS, hidden=())
        result = build_induced_dtmc(env, policy)

        weights = policy.layers[0].weights.tolist()
        bias = policy.layers[0].bias.tolist()
        states, rows = avoid_induced_chain(weights, bias, 3, 3, (2, 2), 0.5)

        assert sorted(result.dtmc.state_vectors) == states
        for i, vector in enumerate(result.dtmc.state_vectors):
            built = sorted(
                (result.dtmc.state_vectors[j], p) for j, p in result.dtmc.rows[i]
            )
            assert built == sorted(rows[vector])

    def test_labels_follow_the_collision_rule(self):
        env = avoidance()
        policy = random_policy(17, AVOIDANCE_FEATURES, AVOIDANCE_ACTIONS, hidden=(5,))
        result = build_induced_dtmc(env, policy)
        for vector, labels in zip(result.dtmc.state_vectors, result.dtmc.state_labels):
            ax, ay, ox, oy = vector
            assert (("collision" in labels)) == ((ax, ay) == (ox, oy))


class TestTaxiFidelity:
    @pytest.mark.parametrize("seed", [0, 1])
    def test_rows_replay_the_environment(self, seed):
        env = mini_taxi()
        policy = random_policy(seed, TAXI_FEATURES, TAXI_ACTIONS, hidden=(6,))
        result = build_induced_dtmc(env, policy)
        for i, vector in enumerate(result.dtmc.state_vectors):
            action = policy.select_action(vector, env.available_actions(vector))
            assert result.chosen_actions[i] == action
            expected = tuple(
                (result.state_index[target], p)
                for target, p in env.successors(vector, action).support
            )
            assert result.dtmc.rows[i] == expected

    def test_reachable_set_matches_independent_walk(self):
        env = mini_taxi()
        policy = random_policy(3, TAXI_FEATURES, TAXI_ACTIONS, hidden=())
        result = build_induced_dtmc(env, policy)

        weights = policy.layers[0].weights.tolist()
        bias = policy.layers[0].bias.tolist()

        def expand(state):
            available = taxi_actions(state, 4, 4, (3, 3), (3, 0), (0, 0))
            picked = argmax_in_schema(
                linear_logits(weights, bias, state), list(TAXI_ACTIONS), available
            )
            yield taxi_step(state, picked, 8, 2, (0, 0))

        expected = closure((0, 0, 8, 0, 0), expand)
        assert set(result.dtmc.state_vectors) == expected


# ===== Export =====


class TestExport:
    def test_round_trips_through_the_explicit_loader(self, two_coin_env, two_coin, step_policy):
        built = build_induced_dtmc(two_coin_env, step_policy).dtmc
        text = induced_to_explicit(built, ("pos",))

        reloaded_env = load_explicit_model(text)
        pi_policy = make_policy(("pos",), ("pi",), [(np.zeros((1, 1)), np.zeros(1))])
        round_tripped = build_induced_dtmc(reloaded_env, pi_policy).dtmc

        assert round_tripped.state_vectors == built.state_vectors
        assert round_tripped.state_labels == built.state_labels
        assert round_tripped.rows == built.rows

    def test_document_shape(self, chain3_env, step_policy):
        built = build_induced_dtmc(chain3_env, step_policy).dtmc
        doc = json.loads(induced_to_explicit(built, ("pos",)))
        assert doc["actions"] == ["pi"]
        assert doc["initial"] == [0]
        assert [s["s"] for s in doc["states"]] == [[0], [1], [2]]
        assert "labels" not in doc["states"][0]
        assert doc["states"][1]["labels"] == ["goal"]
        assert all(set(s["act"]) == {"pi"} for s in doc["states"])
