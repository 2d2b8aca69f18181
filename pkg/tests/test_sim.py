import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from accperc import _kernels
from accperc.errors import ConfigError
from accperc.rng import trial_rng
from accperc.sim import (
    Frontier,
    TrialConfig,
    advance_frontier,
    enumerate_accessible,
    estimate_lambda_prob,
    martingale_sequence,
    run_trial,
    simulate_counts,
)
from accperc.tree import Explicit, Factorial, Homogeneous, LinearCeil, VaryingLinear, materialize


def test_advance_from_zero_keeps_every_child():
    out = advance_frontier(Frontier(np.array([0.0])), 3, trial_rng(1, 0))
    assert len(out) == 3 and out.level == 1
    assert np.all((out.values > 0) & (out.values < 1))


def test_advance_empty_stays_empty():
    out = advance_frontier(Frontier(np.empty(0)), 5, trial_rng(1, 0))
    assert out.extinct


def test_advance_respects_floor():
    rng = trial_rng(2, 0)
    out = advance_frontier(Frontier(np.array([0.1, 0.2])), 4, rng, next_floor=0.6)
    # both parents sit below the floor, so all 8 children are accessible
    assert len(out) == 8 and np.all(out.values >= 0.6)
    with pytest.raises(ConfigError):
        advance_frontier(Frontier(np.array([0.1])), 2, rng, next_floor=1.0)


def test_conditional_mean_identity():
    # E|advance(F)| = c * sum(1 - x) for a fixed frontier
    frontier = Frontier(np.array([0.05, 0.3, 0.5, 0.9]))
    c = 3
    rng = trial_rng(3, 0)
    sizes = np.array([len(advance_frontier(frontier, c, rng)) for _ in range(50_000)])
    target = c * np.sum(1 - frontier.values)
    assert abs(sizes.mean() - target) < 3 * sizes.std() / math.sqrt(sizes.size)


def test_single_value_mean():
    rng = trial_rng(4, 0)
    sizes = np.array([len(advance_frontier(Frontier(np.array([0.5])), 2, rng)) for _ in range(100_000)])
    assert abs(sizes.mean() - 1.0) < 3 * math.sqrt(0.5 / sizes.size)


@pytest.mark.parametrize("n, p", [(5, 0.01), (40, 0.3), (200, 0.4), (10, 0.9), (1000, 0.02)])
def test_binomial_kernel_matches_law(n, p):
    rng = trial_rng(5, n)
    draws = np.array([_kernels.binomial(rng, n, p) for _ in range(20_000)])
    expected = stats.binom(n, p)
    assert abs(draws.mean() - n * p) < 4 * expected.std() / math.sqrt(draws.size)
    ks = np.arange(draws.max() + 1)
    obs = np.bincount(draws, minlength=ks.size)
    exp = expected.pmf(ks) * draws.size
    keep = exp > 5
    chi2 = ((obs[keep] - exp[keep]) ** 2 / exp[keep]).sum()
    assert stats.chi2.sf(chi2, keep.sum() - 1) > 1e-3


def test_capped_step_matches_plain_then_truncate():
    # the region sweep must have the law of "grow everything, keep the cap smallest"
    base = trial_rng(6, 0).random(300) * 0.5
    c, cap = 40, 800
    assert _kernels.expected_offspring(base, c, 0.0) > 2 * cap
    fast, slow = [], []
    for t in range(400):
        out, capped = _kernels.step_capped(trial_rng(7, t), base, c, 0.0, cap)
        assert capped and out.size == cap
        fast.append((out.max(), out.mean()))
        full = _kernels.step_plain(trial_rng(8, t), base, c, 0.0)
        kept = np.partition(full, cap - 1)[:cap]
        slow.append((kept.max(), kept.mean()))
    fast, slow = np.array(fast), np.array(slow)
    for k in range(2):
        assert stats.ks_2samp(fast[:, k], slow[:, k]).pvalue > 1e-3


def test_capped_step_small_frontier_is_exact():
    out, capped = _kernels.advance(trial_rng(9, 0), np.array([0.2, 0.4]), 3, 0.0, 1000)
    assert not capped and out.size <= 6


def test_zero_root_depth_one_always_survives():
    for g in (LinearCeil(1.5), Factorial(), Homogeneous(3)):
        for t in range(20):
            r = run_trial(TrialConfig(g, 1, "zero", trial_index=t))
            assert r.survived and r.levels[1].count == g.children(0)


def test_linear_ceil_depth_one_survival():
    # 1 - int_0^1 x^2 dx = 2/3
    est = estimate_lambda_prob(TrialConfig(LinearCeil(1.5), 1, seed=11), 100_000)
    assert est[0].p_hat == 1.0
    assert abs(est[1].p_hat - 2 / 3) < 3 * est[1].stderr


def test_path_tree_zero_root_survival():
    g = Explicit([1] * 4)
    est = estimate_lambda_prob(TrialConfig(g, 4, "zero", seed=12), 50_000)
    assert abs(est[4].p_hat - 1 / 24) < 3 * math.sqrt((1 / 24) * (23 / 24) / 50_000)


def test_run_trial_fields_and_determinism():
    cfg = TrialConfig(LinearCeil(2), 8, "random", seed=5, trial_index=17)
    a, b = run_trial(cfg), run_trial(cfg)
    assert a == b
    assert a.to_dict() == b.to_dict()
    counts = a.counts
    dead = np.flatnonzero(counts == 0)
    if dead.size:
        assert np.all(counts[dead[0]:] == 0)
        assert a.extinction_level == dead[0] and not a.survived
    else:
        assert a.survived and a.extinction_level is None


def test_trials_do_not_depend_on_batching_or_threads():
    cfg = TrialConfig(LinearCeil(2), 12, seed=3, frontier_cap=500)
    c1, k1 = simulate_counts(cfg, 64, threads=1)
    c3, k3 = simulate_counts(cfg, 64, threads=3)
    assert np.array_equal(c1, c3) and np.array_equal(k1, k3)
    for t in (0, 9, 63):
        single = run_trial(TrialConfig(LinearCeil(2), 12, seed=3, frontier_cap=500, trial_index=t))
        assert np.array_equal(single.counts, c1[t])


@settings(max_examples=15, deadline=None)
@given(st.floats(0.3, 3.0), st.integers(0, 2**32), st.sampled_from([None, 50]))
def test_estimates_monotone_exactly(alpha, seed, cap):
    est = estimate_lambda_prob(TrialConfig(LinearCeil(alpha), 10, seed=seed, frontier_cap=cap), 40)
    p = [e.p_hat for e in est]
    assert p[0] == 1.0
    assert all(x >= y for x, y in zip(p, p[1:]))


def test_cap_flags():
    g = LinearCeil(3)
    capped = simulate_counts(TrialConfig(g, 10, seed=1, frontier_cap=20), 200)
    free = simulate_counts(TrialConfig(g, 10, seed=1, frontier_cap=None), 200)
    assert capped[1].any() and not free[1].any()
    assert capped[0].max() <= 20
    assert np.all(capped[0][capped[1]] == 20)


def test_config_validation():
    with pytest.raises(ConfigError):
        TrialConfig(Factorial(), 0)
    with pytest.raises(ConfigError):
        TrialConfig(Factorial(), 3, root_mode="max")
    with pytest.raises(ConfigError):
        TrialConfig(Factorial(), 3, frontier_cap=0)
    with pytest.raises(ConfigError):
        TrialConfig(Explicit([2, 2]), 3)
    with pytest.raises(ConfigError):
        simulate_counts(TrialConfig(Factorial(), 3), 0)


def test_martingale_sequence():
    g = VaryingLinear([2] * 6)
    r = run_trial(TrialConfig(g, 6, "zero", seed=2, trial_index=4))
    m = martingale_sequence(r, g)
    assert m[0] == 1.0
    assert np.allclose(m, r.counts / 2.0 ** np.arange(7))
    assert np.allclose(m, [s.martingale for s in r.levels])
    with pytest.raises(ConfigError):
        martingale_sequence(run_trial(TrialConfig(g, 6)), g)


def test_martingale_absorbs_at_zero():
    g = LinearCeil(0.5)
    for t in range(50):
        m = martingale_sequence(run_trial(TrialConfig(g, 8, "zero", trial_index=t)), g)
        z = np.flatnonzero(m == 0)
        if z.size:
            assert np.all(m[z[0]:] == 0)


def _figure_tree():
    tree = materialize(Homogeneous(2), 3)
    fitness = [
        np.array([0.12]),
        np.array([0.33, 0.10]),
        np.array([0.51, 0.78, 0.22, 0.15]),
        np.array([0.62, 0.35, 0.33, 0.93, 0.88, 0.87, 0.27, 0.43]),
    ]
    return tree, fitness


def test_figure_example():
    tree, fitness = _figure_tree()
    with pytest.raises(ConfigError, match="duplicate"):
        enumerate_accessible(tree, fitness)
    # the leaf under 0.78 repeats 0.33; any value below 0.78 leaves the picture unchanged
    fitness[3][2] = 0.331
    acc = enumerate_accessible(tree, fitness)
    assert list(acc[0]) == [0]
    assert list(acc[1]) == [0]
    assert list(acc[2]) == [0, 1]
    assert sorted(fitness[3][acc[3]]) == [0.62, 0.93]


def test_enumerate_trivial_cases():
    path = materialize(Explicit([1, 1, 1]), 3)
    acc = enumerate_accessible(path, [np.array([v]) for v in (0.1, 0.2, 0.5, 0.7)])
    assert [a.size for a in acc] == [1, 1, 1, 1]
    t = materialize(Homogeneous(2), 2)
    acc = enumerate_accessible(t, [np.array([0.99]), np.array([0.1, 0.2]), np.array([0.3, 0.4, 0.5, 0.6])])
    assert [a.size for a in acc] == [1, 0, 0]


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(1, 3), min_size=3, max_size=3), st.integers(0, 2**31))
def test_enumerate_matches_path_scan(children, seed):
    tree = materialize(Explicit(children), 3)
    rng = np.random.default_rng(seed)
    fitness = [rng.random(s) for s in tree.level_sizes]
    acc = enumerate_accessible(tree, fitness)
    for n in range(1, 4):
        for v in range(tree.level_sizes[n]):
            ok, k, idx = True, n, v
            while k > 0:
                p = tree.parents[k][idx]
                ok &= fitness[k][idx] > fitness[k - 1][p]
                k, idx = k - 1, p
            assert ok == (v in set(acc[n]))
