import numpy as np
import pytest

from src.parrondo.errors import NonUniqueStationaryError
from src.parrondo.ergodicity import classify_transient
from src.parrondo.kernels import GameKernel, Params, Pattern, cyclic_permutation, pattern_kernel
from src.parrondo.profit import (
    Dist,
    lambda_map,
    marginal_1,
    marginal_13,
    mu_B,
    mu_mixed,
    mu_pattern,
    mu_r1_closed_form,
    parrondo_effect,
    residual,
    staged_distributions,
    stationary,
)
from tests.dense_oracle import dense_game_a, dense_game_b, dense_mu, dense_stationary
from utils.bit_utils import reflect, rotate

EVEN_RING = Params.from_sequence([1.0, 0.6, 0.6, 0.0])
SLOW = Params.from_sequence([0.1, 0.6, 0.6, 0.75])
TORAL = Params.from_sequence([1.0, 0.16, 0.16, 0.7])
COPY_LEFT = Params.from_sequence([0.0, 0.0, 1.0, 1.0])


@pytest.mark.parametrize("method", ["direct", "power"])
def test_game_a_has_uniform_stationary_law(method):
    pi = stationary(GameKernel.game_a(6), method=method)
    np.testing.assert_allclose(pi.weights, 1 / 64, atol=1e-13)
    assert pi.diagnostics.method == method


def test_transient_states_get_no_mass():
    pi = stationary(pattern_kernel(4, EVEN_RING, Pattern(r=1, s=1)))
    assert pi["0000"] <= 1e-12
    assert pi["1111"] <= 1e-12


def test_game_b_matches_dense_solve():
    p = (1.0, 0.7, 0.7, 0.0)
    pi = stationary(GameKernel.game_b(3, Params.from_sequence(p)))
    np.testing.assert_allclose(pi.weights, dense_stationary(dense_game_b(3, p)), atol=1e-12)


def test_direct_and_power_agree():
    kernel = pattern_kernel(6, SLOW, Pattern(r=1, s=1))
    direct = stationary(kernel, method="direct")
    power = stationary(kernel, method="power")
    np.testing.assert_allclose(direct.weights, power.weights, atol=1e-11)
    assert residual(kernel, direct.weights) <= 1e-12
    assert residual(kernel, power.weights) <= 1e-12
    assert power.diagnostics.start_gap <= 1e-11


@pytest.mark.parametrize("method", ["direct", "power"])
def test_two_absorbing_states_are_reported(method):
    # every player copies its left neighbour: all-0 and all-1 are both absorbing
    with pytest.raises(NonUniqueStationaryError):
        stationary(GameKernel.game_b(4, COPY_LEFT), method=method)


def test_direct_solve_is_size_limited():
    with pytest.raises(ValueError):
        stationary(GameKernel.game_a(13), method="direct")


def test_marginals_of_simple_laws():
    uniform = Dist.uniform(5)
    assert marginal_1(uniform, 3) == pytest.approx((0.5, 0.5))
    np.testing.assert_allclose(marginal_13(uniform).values, 0.25)
    ones = Dist.point_mass(5, "11111")
    assert marginal_1(ones, 2) == (0.0, 1.0)
    table = marginal_13(Dist.point_mass(5, "01000")).values
    assert table[0, 0] == 1.0 and table.sum() == 1.0
    with pytest.raises(ValueError):
        marginal_1(uniform, 6)


def test_dist_clamps_roundoff_but_rejects_negative_weights():
    weights = np.full(8, 1 / 8)
    weights[1] = -1e-17
    weights[2] += 1 / 8
    d = Dist(3, weights)
    assert d.weights[1] == 0.0
    bad = np.full(8, 1 / 8)
    bad[0] = -1e-15
    bad[1] += 1 / 8 + 1e-15
    with pytest.raises(ValueError):
        Dist(3, bad)


def test_marginal_13_reads_players_one_and_three():
    table = marginal_13(Dist.point_mass(4, "1000"))
    assert table[1, 0] == 1.0
    table = marginal_13(Dist.point_mass(4, "0010"))
    assert table[0, 1] == 1.0


def test_stationary_law_is_rotation_invariant():
    N = 6
    pi = stationary(GameKernel.game_b(N, Params.from_sequence([0.3, 0.8, 0.1, 0.55]))).weights
    for shift in range(1, N):
        perm = [rotate(x, N, shift) for x in range(1 << N)]
        np.testing.assert_allclose(pi[perm], pi, atol=1e-12)
    marginals = [marginal_1(Dist(N, pi), site) for site in range(1, N + 1)]
    np.testing.assert_allclose(marginals, [marginals[0]] * N, atol=1e-12)


def test_stationary_law_is_reflection_invariant_when_p1_equals_p2():
    N = 5
    pi = stationary(pattern_kernel(N, SLOW, Pattern(r=2, s=1))).weights
    perm = [reflect(x, N) for x in range(1 << N)]
    np.testing.assert_allclose(pi[perm], pi, atol=1e-12)


def test_marginal_13_symmetry_along_the_pattern():
    N, pattern = 5, Pattern(r=1, s=3)
    pi = stationary(pattern_kernel(N, SLOW, pattern))
    _, b_stages = staged_distributions(pi, N, SLOW, pattern)
    for d in b_stages:
        table = marginal_13(d)
        assert abs(table[0, 1] - table[1, 0]) <= 1e-12


@pytest.mark.parametrize("N", [4, 5])
@pytest.mark.parametrize("pattern", [Pattern(r=1, s=1), Pattern(r=2, s=1), Pattern(r=1, s=2), Pattern(r=2, s=3)])
def test_staged_laws_are_stationary_for_cyclic_permutations(N, pattern):
    pi = stationary(pattern_kernel(N, SLOW, pattern))
    a_stages, b_stages = staged_distributions(pi, N, SLOW, pattern)
    staged = a_stages[1:] + b_stages[1:]
    assert len(staged) == pattern.r + pattern.s - 1
    for which, d in enumerate(staged, start=1):
        expected = stationary(cyclic_permutation(N, SLOW, pattern, which))
        np.testing.assert_allclose(d.weights, expected.weights, atol=1e-12)


def test_mu_b_fair_is_zero():
    assert abs(mu_B(5, Params.fair()).mu) <= 1e-15


@pytest.mark.parametrize("N", [4, 6, 8])
def test_mu_b_vanishes_for_even_rings(N):
    assert abs(mu_B(N, EVEN_RING).mu) <= 1e-10


@pytest.mark.parametrize("N", [3, 5, 7])
def test_mu_b_positive_for_odd_rings(N):
    assert mu_B(N, EVEN_RING).mu > 1e-6


def test_mu_b_formulas_agree():
    report = mu_B(6, Params.from_sequence([0.2, 0.7, 0.4, 0.9]))
    assert set(report.per_formula) == {"mu1", "mu2"}
    assert report.per_formula["mu1"] == pytest.approx(report.per_formula["mu2"], abs=1e-12)


def test_mu_mixed_matches_dense_solve():
    gamma = 0.5
    mapped = SLOW.mixed(gamma)
    pi = dense_stationary(dense_game_b(3, mapped.p))
    report = mu_mixed(3, SLOW, gamma)
    assert report.mode == "mixed" and report.gamma == gamma
    assert report.mu == pytest.approx(dense_mu(pi, 3, mapped.p), abs=1e-12)


def test_mu_mixed_payoff_identity():
    gamma = 0.3
    N = 6
    pi = stationary(GameKernel.game_b(N, SLOW.mixed(gamma)))
    raw = marginal_13(pi).expected_payoff(SLOW)
    assert mu_mixed(N, SLOW, gamma).mu == pytest.approx((1 - gamma) * raw, abs=1e-12)


@pytest.mark.parametrize("gamma", [0.0, 1.0, -0.2])
def test_mu_mixed_rejects_degenerate_gamma(gamma):
    with pytest.raises(ValueError):
        mu_mixed(4, SLOW, gamma)


def test_mu_pattern_fair_is_zero():
    report = mu_pattern(5, Params.fair(), Pattern(r=2, s=1))
    for value in report.per_formula.values():
        assert abs(value) <= 1e-14


@pytest.mark.parametrize("N", [3, 4, 5, 6, 7, 8])
@pytest.mark.parametrize("r", [1, 2, 3])
def test_mu_pattern_positive_for_even_ring_family(N, r):
    value = mu_pattern(N, EVEN_RING, Pattern(r=r, s=1)).mu
    assert value > 1e-6
    assert mu_r1_closed_form(N, EVEN_RING, r) == pytest.approx(value, abs=1e-10)


def test_mu_pattern_matches_dense_product():
    N = 4
    report = mu_pattern(N, SLOW, Pattern(r=1, s=1))
    assert set(report.per_formula) == {"mu1", "mu2", "mu3", "mu4"}
    A = dense_game_a(N)
    B = dense_game_b(N, SLOW.p)
    pi = dense_stationary(A @ B)
    expected = dense_mu(pi @ A, N, SLOW.p) / 2
    for value in report.per_formula.values():
        assert value == pytest.approx(expected, abs=1e-10)


def test_mu4_requires_single_b():
    with pytest.raises(ValueError):
        mu_pattern(4, SLOW, Pattern(r=1, s=2), formula="mu4")
    report = mu_pattern(4, SLOW, Pattern(r=1, s=2))
    assert "mu4" not in report.per_formula


def _random_cases(count, seed):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        yield (
            Params.from_sequence(rng.uniform(0.0, 1.0, size=4)),
            int(rng.integers(3, 10)),
            Pattern(r=int(rng.integers(1, 4)), s=int(rng.integers(1, 4))),
        )


def _check_formulas(params, N, pattern):
    values = mu_pattern(N, params, pattern).per_formula
    assert abs(values["mu1"] - values["mu2"]) <= 1e-10
    assert abs(values["mu1"] - values["mu3"]) <= 1e-10
    if pattern.s == 1:
        assert abs(values["mu3"] - values["mu4"]) <= 1e-10


def test_formula_equivalence_random_draws():
    for params, N, pattern in _random_cases(20, seed=1):
        _check_formulas(params, N, pattern)


@pytest.mark.slow
def test_formula_equivalence_many_random_draws():
    for params, N, pattern in _random_cases(200, seed=2):
        _check_formulas(params, N, pattern)


def test_lambda_map():
    assert lambda_map(EVEN_RING).as_tuple() == pytest.approx((1.0, 0.4, 0.4, 0.0))
    assert lambda_map(Params.fair()) == Params.fair()
    p = Params.from_sequence([0.25, 0.5, 0.75, 1.0])
    assert lambda_map(lambda_map(p)) == p


@pytest.mark.parametrize("p", [(0.1, 0.6, 0.6, 0.75), (0.2, 0.9, 0.3, 0.65), (0.55, 0.15, 0.8, 0.4)])
def test_coupling_identities(p):
    params = Params.from_sequence(p)
    for N in (4, 5):
        assert mu_B(N, params).mu == pytest.approx(-mu_B(N, lambda_map(params)).mu, abs=1e-10)
        pattern = Pattern(r=2, s=1)
        assert mu_pattern(N, params, pattern).mu == pytest.approx(
            -mu_pattern(N, lambda_map(params), pattern).mu, abs=1e-10
        )


def test_coupling_identities_random_draws():
    for params, N, pattern in _random_cases(50, seed=3):
        mirrored = lambda_map(params)
        assert mu_B(N, params).mu == pytest.approx(-mu_B(N, mirrored).mu, abs=1e-10)
        assert mu_pattern(N, params, pattern).mu == pytest.approx(-mu_pattern(N, mirrored, pattern).mu, abs=1e-10)


@pytest.mark.parametrize("N", [3, 4, 5, 6, 7, 8])
@pytest.mark.parametrize("r", [1, 2, 3])
@pytest.mark.parametrize("p1", [0.55, 0.75, 0.95])
def test_closed_form_agrees_with_mu_pattern(N, r, p1):
    params = Params.from_sequence([1.0, p1, p1, 0.0])
    expected = mu_pattern(N, params, Pattern(r=r, s=1)).mu
    value = mu_r1_closed_form(N, params, r)
    assert value == pytest.approx(expected, abs=1e-10)
    assert value > 0


def test_closed_form_boundary_and_preconditions():
    assert mu_r1_closed_form(5, Params.from_sequence([1.0, 0.5, 0.5, 0.0]), 2) == 0.0
    with pytest.raises(ValueError):
        mu_r1_closed_form(5, SLOW, 1)


def test_pattern_chain_puts_no_mass_on_transient_set():
    for p in [(1.0, 0.6, 0.6, 0.0), (0.0, 1.0, 1.0, 0.0), (0.0, 0.3, 0.3, 1.0)]:
        params = Params.from_sequence(p)
        pi = stationary(pattern_kernel(6, params, Pattern(r=1, s=2)))
        t = classify_transient(6, params)
        assert all(pi[x] <= 1e-12 for x in t.states)


def _case_params(case, rng):
    p0, p1, p2, p3 = rng.uniform(0.01, 0.99, size=4)
    edges = {"a": (p0, p3), "b": (1.0, p3), "c": (0.0, p3), "d": (p0, 0.0), "e": (p0, 1.0), "f": (1.0, 0.0), "g": (0.0, 1.0)}
    p0, p3 = edges[case]
    return Params.from_sequence([p0, p1, p2, p3])


@pytest.mark.parametrize("case", list("abcdefg"))
def test_random_draws_put_no_mass_on_transient_set(case):
    rng = np.random.default_rng(ord(case))
    for _ in range(20):
        params = _case_params(case, rng)
        t = classify_transient(6, params)
        assert t.case_label == case
        pi = stationary(pattern_kernel(6, params, Pattern(r=1, s=1)))
        assert sum(pi[x] for x in t.states) <= 1e-12


def test_rotation_invariance_random_draws():
    rng = np.random.default_rng(17)
    for _ in range(20):
        N = int(rng.integers(3, 7))
        params = Params.from_sequence(rng.uniform(0.05, 0.95, size=4))
        pattern = Pattern(r=int(rng.integers(1, 4)), s=int(rng.integers(1, 4)))
        pi = stationary(pattern_kernel(N, params, pattern)).weights
        perm = [rotate(x, N, 1) for x in range(1 << N)]
        np.testing.assert_allclose(pi[perm], pi, atol=1e-12)


def test_parrondo_effect_labels():
    assert parrondo_effect(0.0, 0.01) == "parrondo"
    assert parrondo_effect(-0.02, 0.01) == "parrondo"
    assert parrondo_effect(1e-17, 0.01) == "parrondo"
    assert parrondo_effect(0.02, -0.01) == "anti-parrondo"
    assert parrondo_effect(-0.02, -0.01) == "none"
    assert parrondo_effect(0.02, 0.01) == "none"


@pytest.mark.parametrize("N", [4, 6, 8])
def test_parrondo_effect_on_even_rings(N):
    b = mu_B(N, EVEN_RING).mu
    c = mu_pattern(N, EVEN_RING, Pattern(r=1, s=1)).mu
    assert parrondo_effect(b, c) == "parrondo"


@pytest.mark.slow
def test_toral_example_at_ten_players():
    b = mu_B(10, TORAL).mu
    c = mu_pattern(10, TORAL, Pattern(r=2, s=2)).mu
    assert b <= 1e-12
    assert c > 0
