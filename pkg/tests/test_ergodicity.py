import itertools

import pytest

from src.parrondo.ergodicity import (
    brute_force_transient,
    check_cyclic_ergodicity,
    check_spin_ergodicity,
    classify_transient,
    mixed_condition_a,
)
from src.parrondo.kernels import Params, Pattern, StateIndex
from utils.bit_utils import rotate

GRID = (0.0, 0.25, 0.5, 0.75, 1.0)

EXCEPTIONAL = [
    (1.0, 0.0, 0.0, 1.0),
    (0.0, 1.0, 1.0, 0.5),
    (0.0, 1.0, 1.0, 0.0),
    (0.5, 0.0, 0.0, 1.0),
    (0.0, 0.0, 0.0, 1.0),
    (0.0, 1.0, 1.0, 1.0),
    (0.0, 0.3, 0.3, 1.0),
    (1.0, 0.6, 0.6, 0.0),
]


def states(*strings):
    return frozenset(StateIndex.from_string(s) for s in strings)


def test_case_a_fair():
    t = classify_transient(5, Params.fair())
    assert t.case_label == "a"
    assert t.states == frozenset()


def test_case_f():
    t = classify_transient(6, Params.from_sequence([1.0, 0.6, 0.6, 0.0]))
    assert t.case_label == "f" and not t.exception
    assert t.states == states("000000", "111111")


def test_case_d_exception():
    t = classify_transient(6, Params.from_sequence([0.0, 1.0, 1.0, 0.0]))
    assert t.case_label == "d" and t.exception
    assert t.states == states("001001", "010010", "100100", "111111")


def test_case_d_without_divisibility():
    t = classify_transient(7, Params.from_sequence([0.0, 1.0, 1.0, 0.0]))
    assert t.case_label == "d" and not t.exception
    assert t.states == states("1111111")


def test_case_b_exception():
    t = classify_transient(6, Params.from_sequence([1.0, 0.0, 0.0, 1.0]))
    assert t.case_label == "b" and t.exception
    assert t.states == states("000000", "011011", "101101", "110110")


def test_case_g_parity():
    odd = classify_transient(5, Params.from_sequence([0.0, 0.3, 0.3, 1.0]))
    even = classify_transient(4, Params.from_sequence([0.0, 0.3, 0.3, 1.0]))
    assert odd.case_label == even.case_label == "g"
    assert odd.states == frozenset()
    assert even.states == states("0101", "1010")


def test_case_g_exception_run_lengths():
    t = classify_transient(6, Params.from_sequence([0.0, 0.0, 0.0, 1.0]))
    assert t.case_label == "g" and t.exception
    assert StateIndex.from_string("010101") in t
    assert StateIndex.from_string("011011") in t
    assert StateIndex.from_string("011010") not in t  # ends in 0 next to the leading 0
    assert StateIndex.from_string("011101") not in t
    assert StateIndex.from_string("000000") not in t


def test_brute_force_small_example():
    found = brute_force_transient(4, Params.from_sequence([0.0, 0.3, 0.3, 1.0]), Pattern(r=1, s=1))
    assert found == states("0101", "1010")


@pytest.mark.parametrize("N", [4, 5, 6])
def test_classification_matches_brute_force_on_grid(N):
    pattern = Pattern(r=1, s=1)
    for p in itertools.product(GRID, repeat=4):
        params = Params.from_sequence(p)
        expected = classify_transient(N, params).states
        assert brute_force_transient(N, params, pattern) == expected, p


@pytest.mark.parametrize("N", [6, 9])
@pytest.mark.parametrize("p", EXCEPTIONAL)
@pytest.mark.parametrize("rs", [(1, 1), (2, 1), (2, 3)])
def test_exceptional_cases_match_brute_force(N, p, rs):
    params = Params.from_sequence(p)
    found = brute_force_transient(N, params, Pattern(r=rs[0], s=rs[1]))
    assert found == classify_transient(N, params).states


@pytest.mark.parametrize("p", [(1.0, 0.6, 0.6, 0.0), (0.0, 1.0, 1.0, 0.0), (0.0, 0.0, 0.0, 1.0), (0.1, 0.6, 0.6, 0.75)])
def test_transient_set_does_not_depend_on_pattern(p):
    params = Params.from_sequence(p)
    results = {brute_force_transient(6, params, Pattern(r=r, s=s)) for r, s in [(1, 1), (1, 2), (2, 1), (3, 2)]}
    assert len(results) == 1


def test_transient_set_is_rotation_closed():
    N = 6
    for p in EXCEPTIONAL:
        t = classify_transient(N, Params.from_sequence(p))
        masks = set(t.masks)
        assert {rotate(x, N, 1) for x in masks} == masks


def test_brute_force_rejects_large_rings():
    with pytest.raises(ValueError):
        brute_force_transient(13, Params.fair(), Pattern(r=1, s=1))


def test_cyclic_permutation_ending_in_a_is_irreducible():
    params = Params.from_sequence([1.0, 0.6, 0.6, 0.0])
    report = check_cyclic_ergodicity(4, params, Pattern(r=1, s=1), which=1)
    assert report.word == "BA"
    assert report.ergodic and report.irreducible
    assert len(report.recurrent_class) == 16


def test_cyclic_permutation_ending_in_b_excludes_transient_states():
    params = Params.from_sequence([1.0, 0.6, 0.6, 0.0])
    report = check_cyclic_ergodicity(4, params, Pattern(r=1, s=1), which=2)
    assert report.ergodic and not report.irreducible
    assert report.transient == states("0000", "1111")


@pytest.mark.parametrize("rs", [(1, 1), (2, 1), (1, 3)])
def test_fair_parameters_are_irreducible_for_every_permutation(rs):
    pattern = Pattern(r=rs[0], s=rs[1])
    for which in range(1, pattern.period + 1):
        report = check_cyclic_ergodicity(3, Params.fair(), pattern, which)
        assert report.ergodic and report.irreducible


def test_spin_conditions_fair():
    report = check_spin_ergodicity(Params.fair())
    assert report.condition_a and report.condition_b and report.condition_d
    assert report.pbar == 0.5


def test_spin_conditions_slow_convergence_example():
    report = check_spin_ergodicity(Params.from_sequence([0.1, 0.6, 0.6, 0.75]))
    assert not report.condition_a
    assert report.condition_b
    assert report.pbar == (0.1 + 0.6 + 0.6 + 0.75) / 4


@pytest.mark.parametrize("p", list(itertools.product((0.0, 0.5, 1.0), repeat=4)))
def test_mixing_above_one_half_gives_condition_a(p):
    params = Params.from_sequence(p)
    for gamma in (0.55, 0.75, 0.9):
        assert check_spin_ergodicity(params.mixed(gamma)).condition_a
        assert mixed_condition_a(params, gamma)


def test_mixed_condition_a_rejects_degenerate_gamma():
    with pytest.raises(ValueError):
        mixed_condition_a(Params.fair(), 1.0)
