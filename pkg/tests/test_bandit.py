import itertools
import math

import numpy as np
import pytest

from congames import (
    BanditConfig,
    ConfigurationError,
    CongestionGame,
    delta_equilibrium_gap,
    descent_step_check,
    episode_length,
    estimate_gradient,
    euclidean_preset,
    entropy_preset,
    expected_path_costs,
    generate_random_game,
    mixed_delta_bound,
    mixed_delta_gap,
    parallel_links_game,
    reference_minimizer,
    restrict_profile,
    run_bandit,
    sample_choices,
)
from conftest import random_feasible


def brute_force_expected_costs(game: CongestionGame, flat: np.ndarray) -> np.ndarray:
    """Plain-python enumeration oracle for E[c_s(X)], kept independent of the library."""
    probs = [list(game.n * flat[game.player_slice(i)]) for i in range(game.n)]
    expected = np.zeros(game.dim)
    for combo in itertools.product(*[range(sz) for sz in game.sizes]):
        weight = 1.0
        loads = [0.0] * game.m
        for i, pick in enumerate(combo):
            weight *= probs[i][pick]
            for e in game.paths[i][pick]:
                loads[e] += 1.0 / game.n
        ecosts = [game.edges[e].value(loads[e]) for e in range(game.m)]
        row = 0
        for i in range(game.n):
            for path in game.paths[i]:
                expected[row] += weight * sum(ecosts[e] for e in path)
                row += 1
    return expected


# -- choice sampling ---------------------------------------------------------------


def test_sample_choices_degenerate():
    game = parallel_links_game(2, [[1.0], [1.0]])
    x = np.array([0.5, 0.0, 0.0, 0.5])
    rng = np.random.default_rng(0)
    for _ in range(20):
        cv = sample_choices(rng, game, x)
        assert cv.choices == (0, 1)
        assert np.allclose(cv.flat, x)


def test_sample_choices_frequency():
    game = parallel_links_game(1, [[1.0], [1.0]])
    x = np.array([0.5, 0.5])
    rng = np.random.default_rng(1)
    draws = 100_000
    hits = sum(sample_choices(rng, game, x).choices[0] == 0 for _ in range(draws))
    assert abs(hits / draws - 0.5) <= 0.01  # 3 sigma is ~0.0047


def test_sampled_load_matches_flow():
    game = parallel_links_game(2, [[1.0], [1.0]])
    x = np.full(4, 0.25)
    rng = np.random.default_rng(2)
    draws = 100_000
    acc = np.zeros(game.m)
    for _ in range(draws):
        acc += game.edge_loads(sample_choices(rng, game, x).flat)
    assert np.allclose(acc / draws, game.edge_loads(x), atol=0.01)


def test_sample_choices_rejects_bad_distribution():
    game = parallel_links_game(1, [[1.0], [1.0]])
    with pytest.raises(ValueError, match="sum"):
        sample_choices(np.random.default_rng(0), game, np.array([0.5, 0.6]))


# -- episode lengths ----------------------------------------------------------------


def test_episode_length_formula():
    assert episode_length(nu=1, n=2, d=2, lam_eff=0.1, m_path=1, tau=2) == 84


def test_episode_length_scales_with_nu():
    short = episode_length(nu=1, n=2, d=2, lam_eff=0.1, m_path=1, tau=3)
    long = episode_length(nu=2, n=2, d=2, lam_eff=0.1, m_path=1, tau=3)
    assert short * 2 - 1 <= long <= short * 2 + 1


def test_episode_length_monotone_in_tau():
    lengths = [episode_length(8, 4, 3, 0.05, 2, tau) for tau in range(1, 12)]
    assert all(b >= a for a, b in zip(lengths, lengths[1:]))
    with pytest.raises(ValueError):
        episode_length(8, 4, 3, 0.05, 2, 0)


# -- floored sets -------------------------------------------------------------------


def test_restrict_profile_example():
    game = parallel_links_game(2, [[1.0], [1.0]])
    x = np.array([0.5, 0.0, 0.25, 0.25])
    out = restrict_profile(game, x, 0.1)
    assert np.allclose(out[:2], [0.45, 0.05], atol=1e-15)
    assert math.isclose(out[:2].sum(), 0.5, abs_tol=1e-15)
    assert math.isclose(out[2:].sum(), 0.5, abs_tol=1e-15)


def test_restrict_profile_uniform_fixed_point():
    game = parallel_links_game(3, [[1.0]] * 4)
    x = game.uniform_profile().flat
    assert np.allclose(restrict_profile(game, x, 0.08), x, atol=1e-15)


def test_restrict_profile_vanishing_lambda():
    game = parallel_links_game(2, [[1.0], [0.5]])
    x = np.array([0.4, 0.1, 0.3, 0.2])
    assert np.allclose(restrict_profile(game, x, 1e-12), x, atol=1e-9)


def test_restrict_profile_infeasible_floor():
    game = parallel_links_game(1, [[1.0], [1.0]])
    with pytest.raises(ConfigurationError, match="floor"):
        restrict_profile(game, game.uniform_profile().flat, 0.5)


def test_restrict_profile_l1_distance_bound():
    game = generate_random_game(seed=3, n=3, m=5, d=3)
    rng = np.random.default_rng(3)
    lam = 0.05
    for _ in range(50):
        x = random_feasible(game, rng)
        out = restrict_profile(game, x, lam)
        for i in range(game.n):
            sl = game.player_slice(i)
            l1 = np.abs(out[sl] - x[sl]).sum()
            assert l1 <= 2 * game.sizes[i] * lam / game.n + 1e-12
            assert np.all(out[sl] >= lam / game.n - 1e-15)


# -- gradient estimation ---------------------------------------------------------------


def test_estimate_gradient_constant_observations():
    visits = np.array([5, 0, 3])
    sums = np.array([2.0, 0.0, 1.2])
    est, fallback = estimate_gradient(visits, sums)
    assert np.allclose(est, [0.4, 0.0, 0.4])
    assert fallback.tolist() == [False, True, False]
    est2, _ = estimate_gradient(visits, sums, previous=np.array([9.0, 7.0, 9.0]))
    assert est2[1] == 7.0


def test_expectation_bias_linear_costs_exact():
    game = parallel_links_game(2, [[1.0], [0.5]])
    rng = np.random.default_rng(4)
    for _ in range(10):
        x = random_feasible(game, rng)
        bias = expected_path_costs(game, x) - game.path_costs(x)
        assert np.abs(bias).max() <= 1e-12


def test_expectation_bias_quadratic_three_players():
    # c(y) = (y + y^2)/2 on two links, n = 3: all 8 outcomes enumerated
    game = parallel_links_game(3, [[0.5, 0.5], [0.5, 0.5]])
    assert game.second_derivative_upper == 1.0
    rng = np.random.default_rng(5)
    cap = game.second_derivative_upper * game.m_path / (8 * game.n)
    for _ in range(10):
        x = random_feasible(game, rng)
        expected = expected_path_costs(game, x)
        oracle = brute_force_expected_costs(game, x)
        assert np.allclose(expected, oracle, atol=1e-12)
        bias = expected - game.path_costs(x)
        assert np.all(bias >= -1e-12)
        assert np.all(bias <= cap + 1e-12)


def test_expectation_bias_general_small_game():
    game = generate_random_game(seed=6, n=3, m=4, d=2, degree=2)
    rng = np.random.default_rng(6)
    cap = game.second_derivative_upper * game.m_path / (8 * game.n)
    x = random_feasible(game, rng)
    bias = expected_path_costs(game, x) - game.path_costs(x)
    assert np.all(bias >= -1e-12) and np.all(bias <= cap + 1e-12)


def test_enumeration_cap_suggests_monte_carlo():
    game = parallel_links_game(12, [[1.0]] * 4)  # 4^12 outcomes
    with pytest.raises(ValueError, match="monte-carlo"):
        expected_path_costs(game, game.uniform_profile().flat)


# -- run_bandit ----------------------------------------------------------------------


def test_single_path_players_profile_constant():
    game = parallel_links_game(2, [[1.0]])
    cfg = BanditConfig(lam=0.5, episodes=3, seed=0, nu=1.0, eta=0.1)
    rep = run_bandit(game, cfg)
    for rec in rep.records:
        assert np.allclose(rec.profile, game.uniform_profile().flat)


def test_zero_noise_mode_descends_monotonically():
    game = generate_random_game(seed=7, n=3, m=5, d=3)
    cfg = euclidean_preset(game, episodes=25, seed=0, exact_gradient=True)
    rep = run_bandit(game, cfg)
    assert np.all(np.diff(rep.phis) <= 1e-10)
    assert np.all(rep.grad_errors == 0.0)


def test_zero_noise_mode_passes_descent_checks():
    game = generate_random_game(seed=8, n=4, m=5, d=3)
    cfg = euclidean_preset(game, episodes=20, seed=0, exact_gradient=True)
    rep = run_bandit(game, cfg)
    p = rep.params
    phis = rep.phis
    for prev, nxt in zip(phis, phis[1:]):
        assert descent_step_check(prev, nxt, rep.reference.value, p.theta, p.delta)


def test_bandit_determinism_and_replay(tmp_path):
    game = parallel_links_game(3, [[1.0]] * 3)
    cfg = euclidean_preset(game, episodes=2, seed=42, nu=1.0, record_choices=True)
    rep1 = run_bandit(game, cfg)
    rep2 = run_bandit(game, cfg)
    assert np.array_equal(rep1.phis, rep2.phis)
    for a, b in zip(rep1.choices, rep2.choices):
        assert np.array_equal(a, b)
    rep1.save_replay(tmp_path / "replay.npz")
    loaded = np.load(tmp_path / "replay.npz")
    assert np.array_equal(loaded["episode_1"], rep1.choices[0])
    # replayed choice vectors reproduce the recorded visit counts
    counts = np.bincount(rep1.choices[0][:, 0], minlength=3)
    assert np.array_equal(counts, rep1.records[0].visits[:3])


def test_episode_visits_sum_to_steps():
    game = parallel_links_game(3, [[1.0]] * 3)
    cfg = euclidean_preset(game, episodes=3, seed=5, nu=1.0)
    rep = run_bandit(game, cfg)
    for rec in rep.records:
        for i in range(game.n):
            assert rec.visits[game.player_slice(i)].sum() == rec.steps


def test_bandit_floor_preserved_both_geometries():
    game = parallel_links_game(3, [[1.0]] * 3)
    for preset in (euclidean_preset, entropy_preset):
        cfg = preset(game, episodes=3, seed=1, nu=1.0)
        rep = run_bandit(game, cfg)
        floor = cfg.lam / game.n
        for rec in rep.records:
            assert np.all(rec.profile >= floor - 1e-12)
        assert np.all(rep.x_final >= floor - 1e-12)


def test_estimator_accuracy_small_sample():
    game = parallel_links_game(4, [[1.0]] * 4)
    params = BanditConfig(lam=0.2, episodes=1, seed=0, nu=8.0, eta=0.12).derive(game)
    hits = 0
    trials = 25
    for seed in range(trials):
        cfg = BanditConfig(lam=0.2, episodes=1, seed=seed, nu=8.0, eta=0.12)
        rep = run_bandit(game, cfg)
        hits += rep.grad_errors[0] <= params.epsilon
    assert hits >= trials - 2


def test_theta_gate():
    game = parallel_links_game(10, [[1.0]] * 4)  # theta = sqrt(8/m) = sqrt(2) > 1
    cfg = BanditConfig(lam=0.05, episodes=1)
    with pytest.raises(ConfigurationError, match="theta"):
        cfg.derive(game)


def test_config_validation():
    game = parallel_links_game(2, [[1.0], [1.0]])
    with pytest.raises(ConfigurationError, match="kappa"):
        BanditConfig(lam=0.1, kappa=1.5).derive(game)
    with pytest.raises(ConfigurationError, match="nu"):
        BanditConfig(lam=0.1, nu=0.5).derive(game)
    with pytest.raises(ConfigurationError, match="Lambda"):
        BanditConfig(lam=0.6).derive(game)
    with pytest.raises(ConfigurationError, match="learning rate"):
        BanditConfig(lam=0.1, eta=10.0).derive(game)


def test_presets_satisfy_theta_precondition():
    for game in (
        parallel_links_game(10, [[1.0]] * 10),
        generate_random_game(seed=9, n=4, m=6, d=3),
    ):
        for preset in (euclidean_preset, entropy_preset):
            cfg = preset(game)
            params = cfg.derive(game)
            assert params.theta <= 1.0 + 1e-12
            assert 0.0 < cfg.lam < 1.0 / game.d


# -- descent step check ----------------------------------------------------------------


def test_descent_step_check_gap_zero_case():
    assert descent_step_check(1.0, 1.0 + 0.05, 1.0, theta=0.5, delta=0.1)
    assert not descent_step_check(1.0, 1.2, 1.0, theta=0.5, delta=0.1)


def test_descent_step_check_at_twice_delta_over_theta():
    # gap exactly 2*delta/theta forces a net decrease of at least delta
    theta, delta = 0.4, 0.02
    phi_min = 0.3
    phi_prev = phi_min + 2 * delta / theta
    assert descent_step_check(phi_prev, phi_prev - delta, phi_min, theta, delta)
    assert not descent_step_check(phi_prev, phi_prev - delta + 1e-6, phi_min, theta, delta)


# -- mixed delta gap ----------------------------------------------------------------


def test_mixed_delta_equals_nonatomic_for_linear_costs():
    game = parallel_links_game(2, [[1.0], [0.5]])
    rng = np.random.default_rng(10)
    for _ in range(10):
        x = random_feasible(game, rng)
        mixed = mixed_delta_gap(game, x, mode="enumerate")
        assert math.isclose(mixed.delta, delta_equilibrium_gap(game, x), abs_tol=1e-12)


def test_mixed_delta_at_restricted_minimizer():
    game = parallel_links_game(3, [[0.5, 0.5], [0.5, 0.5]])
    ref = reference_minimizer(game)
    qbar = restrict_profile(game, ref.flat, 0.1)
    res = mixed_delta_gap(game, qbar, mode="enumerate")
    cap = game.second_derivative_upper * game.m_path / game.n
    assert res.delta <= cap + 1e-9


def test_mixed_delta_single_player_single_path():
    game = parallel_links_game(1, [[1.0]])
    res = mixed_delta_gap(game, np.array([1.0]), mode="enumerate")
    assert res.delta == 0.0


def test_mixed_delta_monte_carlo_agrees():
    game = parallel_links_game(2, [[1.0], [0.5]])
    x = restrict_profile(game, game.uniform_profile().flat, 0.2)
    exact = mixed_delta_gap(game, x, mode="enumerate")
    mc = mixed_delta_gap(game, x, mode="monte-carlo", samples=200_000, seed=3)
    assert np.allclose(mc.expected_costs, exact.expected_costs, atol=0.01)
    with pytest.raises(ValueError, match="mode"):
        mixed_delta_gap(game, x, mode="grid")


def test_mixed_delta_theory_ceiling():
    game = parallel_links_game(3, [[0.5, 0.5], [0.5, 0.5]])
    ref = reference_minimizer(game)
    cfg = euclidean_preset(game, episodes=4, seed=2, nu=1.0)
    rep = run_bandit(game, cfg, reference=ref)
    for idx, rec in enumerate(rep.records):
        gap = max(rep.certified_gaps[idx], 0.0)
        res = mixed_delta_gap(game, rec.profile, mode="enumerate")
        assert res.delta <= mixed_delta_bound(game, gap) + 1e-9
