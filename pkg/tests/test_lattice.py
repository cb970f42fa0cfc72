import numpy as np
import pytest

from vcomplex.diffusion import u
from vcomplex.lattice import (AutomatonState, CoarseProfile, SimConfig, apparent_complexity,
                              bin_index, coarse_grain, color_profile, diffusion_time,
                              draw_lights, fraction_top, init_state, run_experiment,
                              segment_centres, step)


def lanes(state):
    return state.right_lane.tolist(), state.left_lane.tolist()


def test_init_layouts():
    assert lanes(init_state(SimConfig(5, 0, split_node=3))) == ([1, 1, 0, 0], [1, 1, 0, 0])
    assert lanes(init_state(SimConfig(5, 0, split_node=5))) == ([1] * 4, [1] * 4)
    assert lanes(init_state(SimConfig(5, 0, split_node=1))) == ([0] * 4, [0] * 4)
    assert SimConfig(201, 0).split_node == 101


@pytest.mark.parametrize("kw", [dict(n_nodes=1, total_steps=0), dict(n_nodes=5, total_steps=-1),
                                dict(n_nodes=5, total_steps=0, split_node=6),
                                dict(n_nodes=5, total_steps=0, replicas=0)])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        SimConfig(**kw)


def test_golden_two_panels():
    # nodes 1..5, cream on the first two segments; only node 3 meets different species
    start = init_state(SimConfig(5, 1, split_node=3))
    green = step(start, lights=np.array([False, True, False]))
    assert lanes(green) == ([1, 1, 1, 0], [1, 0, 0, 0])
    assert color_profile(green).tolist() == [1.0, 0.5, 0.5, 0.0]
    red = step(start, lights=np.array([False, False, False]))
    assert lanes(red) == ([1, 1, 0, 0], [1, 1, 0, 0])
    # lights elsewhere make no difference where the species agree
    assert lanes(step(start, lights=np.array([True, True, True]))) == lanes(green)


def test_two_node_cycle():
    s0 = AutomatonState(np.array([1], dtype=np.int8), np.array([0], dtype=np.int8))
    s1 = step(s0, lights=np.zeros(0, dtype=bool))
    s2 = step(s1, lights=np.zeros(0, dtype=bool))
    assert lanes(s1) == ([0], [1])
    assert lanes(s2) == lanes(s0) and s2.time == 2
    assert color_profile(s2).tolist() == [0.5]


def test_all_cream_is_fixed():
    s = init_state(SimConfig(9, 0, split_node=9))
    rng = np.random.default_rng(0)
    for _ in range(20):
        s = step(s, rng)
    assert color_profile(s).tolist() == [1.0] * 8


def test_one_draw_per_interior_node():
    a, b = np.random.default_rng(5), np.random.default_rng(5)
    s = init_state(SimConfig(7, 0))
    step(s, a)
    draw_lights(b, 7)
    assert a.random() == b.random()


def test_fraction_top():
    cfg = SimConfig(9, 0)
    s = init_state(cfg)
    assert fraction_top(s, cfg.split_node) == 1.0
    flipped = AutomatonState(s.right_lane[::-1].copy(), s.left_lane[::-1].copy())
    assert fraction_top(flipped, cfg.split_node) == 0.0
    with pytest.raises(ZeroDivisionError):
        fraction_top(init_state(SimConfig(9, 0, split_node=1)), 5)


def test_fraction_top_relaxes_to_half():
    cfg = SimConfig(21, 6000, replicas=8, seed=3)
    res = run_experiment(cfg, groups=4, bins=12, sample_times=[0, 6000])
    assert res.fraction_top[0] == 1.0
    assert res.fraction_top[-1] == pytest.approx(0.5, abs=0.05)


def test_particle_conservation_random_seeds():
    for seed in range(10):
        rng = np.random.default_rng(seed)
        s = init_state(SimConfig(31, 0, split_node=1 + seed), replicas=3)
        before = (s.cream_count(), (1 - s.right_lane).sum(-1) + (1 - s.left_lane).sum(-1))
        for _ in range(300):
            s = step(s, rng)
        after = (s.cream_count(), (1 - s.right_lane).sum(-1) + (1 - s.left_lane).sum(-1))
        assert np.array_equal(before[0], after[0]) and np.array_equal(before[1], after[1])


def test_coarse_grain_examples():
    split = np.r_[np.ones(100), np.zeros(100)]
    cp = coarse_grain(split, 20, 12)
    assert cp.bin_indices.tolist() == [12] * 10 + [1] * 10
    assert apparent_complexity(cp) == 2
    half = coarse_grain(np.full(200, 0.5), 20, 12)
    assert set(half.bin_indices.tolist()) == {6}
    assert apparent_complexity(half) == 1
    assert set(coarse_grain(np.ones(200), 20, 12).bin_indices.tolist()) == {12}
    with pytest.raises(ValueError):
        coarse_grain(np.ones(199), 20, 12)


def test_coarse_grain_averages_replicas_first():
    reps = np.array([[1.0, 1.0, 0.0, 0.0], [0.0, 0.0, 0.0, 0.0]])
    cp = coarse_grain(None, 2, 12, replica_profiles=reps)
    assert cp.group_means.tolist() == [0.5, 0.0]


def test_twelve_bin_staircase():
    means = (12 - np.arange(12) - 0.5) / 12
    cp = CoarseProfile(means, bin_index(means, 12), 12, 12)
    assert apparent_complexity(cp) == 12


def test_run_experiment_trivial_cases():
    res = run_experiment(SimConfig(201, 0, replicas=1), 20, 12, sample_times=[0])
    assert res.complexity == [2]
    res = run_experiment(SimConfig(41, 50, split_node=41, replicas=2), 4, 12,
                         sample_times=[0, 25, 50])
    assert res.complexity == [1, 1, 1]
    with pytest.raises(ValueError):
        run_experiment(SimConfig(41, 50), 4, 12, sample_times=[60])


def test_determinism_and_thread_independence():
    cfg = SimConfig(41, 400, seed=9, replicas=6)
    a = run_experiment(cfg, 4, 12, sample_times=range(0, 401, 100))
    b = run_experiment(cfg, 4, 12, sample_times=range(0, 401, 100), threads=3)
    assert a.curve_csv() == b.curve_csv()
    assert all(np.array_equal(a.profiles[t], b.profiles[t]) for t in a.times)
    c = run_experiment(SimConfig(41, 400, seed=10, replicas=6), 4, 12,
                       sample_times=range(0, 401, 100))
    assert a.curve_csv() != c.curve_csv()


def test_replica_streams_do_not_depend_on_chunking():
    from vcomplex.lattice import _run_replicas
    cfg = SimConfig(21, 300, seed=4, replicas=2)
    p1, _ = _run_replicas(cfg, [0, 1], [300], chunk=7)
    p2, _ = _run_replicas(cfg, [0, 1], [300], chunk=1024)
    assert np.array_equal(p1[300], p2[300])


@pytest.fixture(scope="module")
def desk_run():
    cfg = SimConfig(201, 18_000, seed=0, replicas=20)
    return run_experiment(cfg, 20, 12, sample_times=[0, 500, 2000, 6000, 18_000])


def test_group_profiles_follow_diffusion(desk_run):
    xc = segment_centres(200)
    for t in desk_run.times:
        td = float(diffusion_time(t, 200))
        ref = (u(xc, td) if td > 0 else np.r_[np.ones(100), np.zeros(100)]).reshape(20, 10).mean(1)
        assert np.max(np.abs(desk_run.coarse[t].group_means - ref)) < 0.08


def test_averaged_profiles_never_invert_by_a_bin(desk_run):
    for t in desk_run.times:
        rises = np.diff(desk_run.coarse[t].group_means)
        assert rises.max(initial=0) < 1 / 12
        assert np.diff(desk_run.coarse[t].bin_indices).max(initial=0) <= 1


def test_csv_forms(desk_run):
    assert desk_run.curve_csv().splitlines()[:2] == ["time,apparent_complexity,fraction_top",
                                                     "0,2,1.0"]
    lines = desk_run.profile_csv(0).splitlines()
    assert lines[0] == "segment,color" and lines[1] == "0,1.0" and len(lines) == 201
