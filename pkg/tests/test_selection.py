import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from intersim.dataset import CandidateVelocityDataset, Pool, candidates_near
from intersim.energy import EnergyModel, MaskTable, Neighbor, total_energy
from intersim.selection import (
    DATASET,
    SUPPLEMENT,
    AgentHalted,
    IndicatorThresholds,
    SupplementConfig,
    acceptable,
    commit_selection,
    heading_change,
    select_velocity,
    supplement,
    window_stalled,
)

LOOSE = IndicatorThresholds(1e9, 1e9, 1e9, 1e9)


def dataset(velocities, kind="car", lane="L"):
    return CandidateVelocityDataset({(kind, lane): Pool(np.asarray(velocities, dtype=float))})


class TestAcceptable:
    def test_continuation(self, make_agent):
        a = make_agent()
        assert acceptable(a.velocity, a, 0.0, 0.0)

    def test_speed_jump(self, make_agent):
        a = make_agent(velocity=(5.0, 0.0))
        assert not acceptable((6.5, 0.0), a, 0.0, 0.0)

    def test_inclusive_collision_bound(self, make_agent):
        a = make_agent()
        assert acceptable(a.velocity, a, 0.0, 10.0)
        assert not acceptable(a.velocity, a, 0.0, 10.0 + 1e-9)

    def test_heading_bound(self, make_agent):
        a = make_agent(velocity=(5.0, 0.0))
        assert acceptable((5.0 * math.cos(0.99), 5.0 * math.sin(0.99)), a, 0.0, 0.0)
        assert not acceptable((5.0 * math.cos(1.01), 5.0 * math.sin(1.01)), a, 0.0, 0.0)

    def test_guidance_bound(self, make_agent):
        a = make_agent()
        assert not acceptable(a.velocity, a, 2.01, 0.0)

    def test_thresholds_positive(self):
        with pytest.raises(ValueError):
            IndicatorThresholds(tau_m=0.0)

    def test_near_zero_heading(self):
        assert heading_change((0.0, 0.0), (1.0, 0.0)) == 0.0


class TestSupplement:
    def test_default_cardinality(self):
        assert len(supplement((3.0, 4.0))) == 63

    def test_magnitudes(self):
        mags = np.unique(np.round(np.hypot(*supplement((5.0, 0.0)).T), 12))
        assert np.allclose(mags, np.arange(4.0, 6.01, 0.25))

    def test_directions_rotate_around_heading(self):
        angles = np.unique(np.round(np.arctan2(*supplement((0.0, 2.0))[:, ::-1].T), 12))
        assert np.allclose(angles, math.pi / 2 + np.arange(-3, 4) * 0.3)

    def test_clamping_collapses_duplicates(self):
        out = supplement((0.1, 0.0))
        mags = np.hypot(*out.T)
        assert mags.min() == 0.0
        assert np.sum(mags == 0.0) == 1
        assert len(out) == 1 + 5 * 7
        assert len(np.unique(out, axis=0)) == len(out)

    def test_zero_velocity_uses_guidance(self):
        out = supplement((0.0, 0.0), guidance=(0.0, 1.0))
        moving = out[np.hypot(*out.T) > 0]
        assert np.allclose(np.sort(np.unique(np.round(np.arctan2(moving[:, 1], moving[:, 0]), 12))),
                           math.pi / 2 + np.arange(-3, 4) * 0.3)

    def test_zero_velocity_without_guidance_halts(self):
        with pytest.raises(AgentHalted):
            supplement((0.0, 0.0))

    @pytest.mark.parametrize("kw", [dict(psi_m=1.0, I_m=0.3), dict(psi_d=0.9, I_d=0.4), dict(I_m=0.0)])
    def test_config_ratio_must_be_integer(self, kw):
        with pytest.raises(ValueError):
            SupplementConfig(**kw)

    @given(st.floats(-20, 20), st.floats(-20, 20), st.sampled_from([(1.0, 0.25), (0.5, 0.5), (2.0, 0.5)]),
           st.sampled_from([(0.9, 0.3), (0.6, 0.2), (0.4, 0.4)]))
    def test_size_and_non_negative(self, vx, vy, m, d):
        cfg = SupplementConfig(m[0], m[1], d[0], d[1])
        speed = math.hypot(vx, vy)
        if speed < 1e-9:
            return
        out = supplement((vx, vy), cfg)
        P, Q = cfg.n_magnitude, cfg.n_direction
        clamped = sum(1 for p in range(-P, P + 1) if speed + p * cfg.I_m <= 0.0)
        expected = (2 * P + 1) * (2 * Q + 1) - max(0, clamped - 1) * (2 * Q + 1) - (2 * Q if clamped else 0)
        assert len(out) == expected
        assert np.all(np.hypot(*out.T) >= 0.0)


def brute_force(agent, cands, nbs, model):
    """Exhaustive argmin with the scalar energy; ties go to the smaller index."""
    best, best_k = math.inf, -1
    for k, c in enumerate(cands):
        E = total_energy(agent, c, nbs, model)[0]
        if E < best:
            best, best_k = E, k
    return cands[best_k]


class TestSelect:
    def test_exact_continuation(self, make_agent, model):
        a = make_agent()
        v, origin = select_velocity(a, [], model, dataset([a.velocity]))
        assert origin == DATASET and np.array_equal(v, a.velocity)

    def test_ties_go_to_smaller_index(self, make_agent, model):
        a = make_agent(velocity=(5.0, 0.0))
        same = [(4.0, 3.0), (4.0, -3.0)]  # mirror images: identical energies without neighbours
        a.guidance = np.array([1.0, 0.0])
        v, _ = select_velocity(a, [], model, dataset(same), LOOSE)
        assert np.array_equal(v, candidates_near(dataset(same), "car", "L", 5.0, 200)[0])

    @given(st.integers(0, 100_000))
    @settings(max_examples=40, deadline=None)
    def test_phase_one_matches_brute_force(self, seed):
        from intersim.energy import AgentState, default_weights
        rng = np.random.default_rng(seed)
        model = EnergyModel(mask=MaskTable.default())
        a = AgentState(0, "car", np.zeros(2), rng.normal(0, 3, 2), np.array([1.0, 0.0]), 5.0, 5.0, 7.0,
                       "straight", "L", np.array([50.0, 0.0]), 1.0, default_weights("car"), np.array([1.0, 0.0]))
        nbs = [Neighbor(rng.uniform(-15, 15, 2), rng.normal(0, 3, 2), "car", "straight", np.array([0.0, 1.0]), k,
                        radius=1.0) for k in range(int(rng.integers(0, 11)))]
        ds = dataset(rng.normal(0, 5, (int(rng.integers(1, 301)), 2)))
        v, origin = select_velocity(a, nbs, model, ds, LOOSE, window=200)
        window = candidates_near(ds, "car", "L", float(np.hypot(*a.velocity)), 200)
        assert origin == DATASET
        assert np.array_equal(v, brute_force(a, window, nbs, model))

    def test_single_straight_velocity_turning_agent(self, make_agent, model):
        # the pool only knows "straight along +x" but guidance points left; w_g as scaled
        # up inside the central area makes the straight velocity unacceptable
        from intersim.energy import default_weights
        a = make_agent(planning="turn_left", guidance=np.array([0.0, 1.0]), weights=default_weights("car", w_g=2.0))
        v, origin = select_velocity(a, [], model, dataset([(5.0, 0.0)]))
        assert origin == SUPPLEMENT
        assert math.atan2(v[1], v[0]) > 0.0  # rotated toward the guidance side

    def test_without_supplement_the_pool_is_all_there_is(self, make_agent, model):
        a = make_agent(planning="turn_left", guidance=np.array([0.0, 1.0]))
        v, origin = select_velocity(a, [], model, dataset([(5.0, 0.0)]), use_supplement=False)
        assert origin == DATASET and np.array_equal(v, (5.0, 0.0))

    def test_empty_pool_without_supplement_halts(self, make_agent, model):
        with pytest.raises(AgentHalted):
            select_velocity(make_agent(), [], model, CandidateVelocityDataset(), use_supplement=False)

    def test_empty_pool_uses_supplement(self, make_agent, model):
        v, origin = select_velocity(make_agent(), [], model, CandidateVelocityDataset())
        assert origin == SUPPLEMENT

    def test_contact_guard_avoids_overrun(self, make_agent, model):
        a = make_agent(velocity=(5.0, 0.0))
        blocker = Neighbor(np.array([2.5, 0.0]), np.zeros(2), "car", "straight", np.array([1.0, 0.0]), 1, radius=1.0)
        fast, slow = (5.0, 0.0), (0.5, 0.0)
        ds = dataset([fast, slow])
        v, _ = select_velocity(a, [blocker], model, ds, LOOSE, contact_guard=True, use_supplement=False)
        assert np.array_equal(v, slow)

    def test_road_guard(self, make_agent, model):
        a = make_agent(velocity=(5.0, 0.0))
        ds = dataset([(5.0, 0.0), (0.0, 5.0)])
        v, _ = select_velocity(a, [], model, ds, LOOSE, road=lambda pts: pts[:, 0] < 0.1, use_supplement=False)
        assert np.array_equal(v, (0.0, 5.0))

    def test_deterministic(self, make_agent, model):
        rng = np.random.default_rng(5)
        ds = dataset(rng.normal(0, 5, (100, 2)))
        a = make_agent()
        nbs = [Neighbor(np.array([6.0, 1.0]), np.array([1.0, 0.0]), "car", "turn_left", np.array([1.0, 0.0]), 1)]
        first = select_velocity(a, nbs, model, ds, contact_guard=True)
        second = select_velocity(a, nbs, model, ds, contact_guard=True)
        assert np.array_equal(first[0], second[0]) and first[1] == second[1]


class TestStall:
    def test_narrow_window_far_from_expected_speed(self, make_agent):
        a = make_agent(velocity=(0.0, 0.0), expected_speed=5.0)
        cands = np.array([[0.0, 0.0], [0.05, 0.0], [0.1, 0.0]])
        assert window_stalled(cands, cands[2], a, 0.25)

    def test_wide_window(self, make_agent):
        a = make_agent(velocity=(0.0, 0.0), expected_speed=5.0)
        cands = np.array([[0.0, 0.0], [1.0, 0.0]])
        assert not window_stalled(cands, cands[1], a, 0.25)

    def test_already_at_expected_speed(self, make_agent):
        a = make_agent(expected_speed=5.0)
        cands = np.array([[5.0, 0.0], [5.05, 0.0]])
        assert not window_stalled(cands, cands[0], a, 0.25)

    def test_stalled_window_falls_back_to_supplement(self, make_agent, model):
        a = make_agent(velocity=(0.1, 0.0), expected_speed=5.0)
        ds = dataset([(0.0, 0.0), (0.1, 0.0), (0.12, 0.0)])
        assert select_velocity(a, [], model, ds)[1] == DATASET
        v, origin = select_velocity(a, [], model, ds, stall_check=True)
        assert origin == SUPPLEMENT and np.hypot(*v) > 0.12


class TestCommit:
    def test_position_update(self, make_agent):
        a = make_agent(velocity=(0.0, 0.0))
        ds = dataset([(1.0, 0.0)])
        commit_selection(a, (1.0, 0.0), DATASET, ds, 0.0333)
        assert np.allclose(a.position, (0.0333, 0.0)) and len(ds.pool("car", "L")) == 1

    @given(st.lists(st.tuples(st.floats(-9, 9), st.floats(-9, 9)), min_size=1, max_size=30))
    def test_supplement_grows_sorted_pool(self, vs):
        from intersim.energy import AgentState, default_weights
        a = AgentState(0, "car", np.zeros(2), np.zeros(2), np.array([1.0, 0.0]), 5.0, 5.0, 7.0, "straight", "L",
                       np.ones(2), 1.0, default_weights("car"))
        ds = dataset([(1.0, 0.0)])
        for k, v in enumerate(vs):
            commit_selection(a, v, SUPPLEMENT, ds, 0.1)
            assert len(ds.pool("car", "L")) == k + 2
        assert ds.pool("car", "L").is_sorted()
