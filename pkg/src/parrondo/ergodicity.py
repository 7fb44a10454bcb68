"""
Transient sets of the pattern chains and ergodicity predicates for the
infinite-ring spin system.

`classify_transient` evaluates the closed-form case analysis on (p0, p3);
`brute_force_transient` recovers the same set from the support graph and is
used as its oracle.
"""
from math import gcd
from typing import FrozenSet, List, Literal, Optional, Tuple

import numpy as np
import scipy.sparse as sp
from pydantic import BaseModel, ConfigDict
from scipy.sparse import csgraph

from utils.bit_utils import cyclic_runs, periodic_state, rotation_orbit
from .errors import StructuralError
from .kernels import (
    CompositeKernel,
    Params,
    Pattern,
    StateIndex,
    _check_ring_size,
    cyclic_permutation,
    pattern_kernel,
)

MAX_BRUTE_FORCE_SIZE = 12

CaseLabel = Literal["a", "b", "c", "d", "e", "f", "g"]


class TransientSet(BaseModel):
    """Transient states T of P_A^r P_B^s; the same for every r, s >= 1."""

    model_config = ConfigDict(frozen=True)

    N: int
    case_label: CaseLabel
    exception: bool = False
    states: FrozenSet[StateIndex] = frozenset()

    @property
    def label(self) -> str:
        return f"{self.case_label} (exception)" if self.exception else self.case_label

    @property
    def masks(self) -> List[int]:
        return sorted(x.bits for x in self.states)

    def strings(self) -> List[str]:
        return [str(x) for x in sorted(self.states)]

    def __contains__(self, x) -> bool:
        bits = x.bits if isinstance(x, StateIndex) else int(x)
        return StateIndex(bits, self.N) in self.states


class CyclicErgodicityReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    N: int
    which: int
    word: str
    ergodic: bool
    irreducible: bool
    period: int
    recurrent_class: FrozenSet[StateIndex]

    @property
    def transient(self) -> FrozenSet[StateIndex]:
        everything = {StateIndex(b, self.N) for b in range(1 << self.N)}
        return frozenset(everything - self.recurrent_class)


class SpinErgodicityReport(BaseModel):
    """Sufficient conditions for ergodicity of the spin system on Z."""

    model_config = ConfigDict(frozen=True)

    condition_a: bool
    condition_b: bool
    condition_c: bool
    condition_d: bool
    pbar: float


def _orbit(motif: str, N: int) -> set:
    return set(rotation_orbit(periodic_state(motif, N), N))


def _runs_bounded(state: int, N: int, max_zero_run: int, max_one_run: int) -> bool:
    runs = cyclic_runs(state, N)
    if len(runs) == 1:
        return False
    limits = (max_zero_run, max_one_run)
    return all(length <= limits[bit] for bit, length in runs)


def classify_transient(N: int, params: Params) -> TransientSet:
    """
    Closed-form transient set. The cases partition parameter space on the
    exact values of p0 and p3; the exceptions need further exact matches on
    p1, p2 and, for the 3-periodic families, 3 | N.
    """
    _check_ring_size(N)
    p0, p1, p2, p3 = params.as_tuple()
    zero, one = 0, (1 << N) - 1
    div3 = N % 3 == 0

    if 0 < p0 < 1 and 0 < p3 < 1:
        label, exception, states = "a", False, set()
    elif p0 == 1 and p3 == 0:
        label, exception, states = "f", False, {zero, one}
    elif p0 == 1:
        exception = div3 and (p1, p2, p3) == (0, 0, 1)
        states = {zero} | _orbit("011", N) if exception else {zero}
        label = "b"
    elif p3 == 0:
        exception = div3 and (p0, p1, p2) == (0, 1, 1)
        states = _orbit("001", N) | {one} if exception else {one}
        label = "d"
    elif p0 == 0 and p3 == 1:
        label = "g"
        if p1 == p2 == 0:
            exception = True
            states = {x for x in range(1 << N) if _runs_bounded(x, N, 1, 2)}
        elif p1 == p2 == 1:
            exception = True
            states = {x for x in range(1 << N) if _runs_bounded(x, N, 2, 1)}
        else:
            exception = False
            states = _orbit("01", N) if N % 2 == 0 else set()
    elif p0 == 0:
        exception = div3 and p1 == p2 == 1
        states = _orbit("001", N) if exception else set()
        label = "c"
    else:
        exception = div3 and p1 == p2 == 0
        states = _orbit("011", N) if exception else set()
        label = "e"

    return TransientSet(
        N=N,
        case_label=label,
        exception=exception,
        states=frozenset(StateIndex(x, N) for x in states),
    )


def _check_brute_force_size(N: int) -> None:
    _check_ring_size(N)
    if N > MAX_BRUTE_FORCE_SIZE:
        raise ValueError(f"Support-graph analysis is limited to N <= {MAX_BRUTE_FORCE_SIZE}, got {N}")


def _period(graph: sp.csr_matrix, members: np.ndarray) -> int:
    """Period of an irreducible class from BFS levels: gcd of level[u] + 1 - level[v] over edges."""
    sub = graph[members][:, members].tocsr()
    if sub.diagonal().any():
        return 1
    order, predecessors = csgraph.breadth_first_order(sub, 0, directed=True, return_predecessors=True)
    level = np.zeros(len(members), dtype=np.int64)
    for v in order[1:]:
        level[v] = level[predecessors[v]] + 1
    coo = sub.tocoo()
    period = 0
    for delta in np.unique(np.abs(level[coo.row] + 1 - level[coo.col])):
        period = gcd(period, int(delta))
        if period == 1:
            break
    return period


def recurrent_class(kernel: CompositeKernel) -> Tuple[np.ndarray, int]:
    """
    Unique closed communicating class of the kernel's support graph and its
    period. Raises StructuralError unless exactly one class is closed.
    """
    graph = kernel.support()
    n_comp, labels = csgraph.connected_components(graph, directed=True, connection="strong")
    coo = graph.tocoo()
    leaving = labels[coo.row] != labels[coo.col]
    open_labels = np.unique(labels[coo.row[leaving]])
    closed = np.setdiff1d(np.arange(n_comp), open_labels)
    if len(closed) != 1:
        raise StructuralError(
            f"Support graph of {kernel!r} has {len(closed)} closed classes, expected exactly one"
        )
    members = np.flatnonzero(labels == closed[0])
    return members, _period(graph, members)


def brute_force_transient(N: int, params: Params, pattern: Pattern) -> FrozenSet[StateIndex]:
    """States outside the closed class of P_A^r P_B^s, found by graph search (N <= 12)."""
    _check_brute_force_size(N)
    kernel = pattern_kernel(N, params, pattern)
    members, period = recurrent_class(kernel)
    if period != 1:
        raise StructuralError(f"Recurrent class of {kernel!r} has period {period}")
    transient = np.setdiff1d(np.arange(1 << N), members)
    return frozenset(StateIndex(int(x), N) for x in transient)


def check_cyclic_ergodicity(N: int, params: Params, pattern: Pattern, which: int) -> CyclicErgodicityReport:
    """
    Support-graph check of the which-th cyclic permutation of P_A^r P_B^s.
    Permutations ending in P_A (which <= r) should be irreducible on all 2^N
    states; the others should have closed class equal to the complement of T.
    """
    _check_brute_force_size(N)
    kernel = cyclic_permutation(N, params, pattern, which)
    members, period = recurrent_class(kernel)
    return CyclicErgodicityReport(
        N=N,
        which=which,
        word=pattern.cyclic_word(which),
        ergodic=period == 1,
        irreducible=len(members) == 1 << N,
        period=period,
        recurrent_class=frozenset(StateIndex(int(x), N) for x in members),
    )


def check_spin_ergodicity(params: Params) -> SpinErgodicityReport:
    p0, p1, p2, p3 = params.as_tuple()
    pbar = (p0 + p1 + p2 + p3) / 4

    condition_a = max(abs(p0 - p1), abs(p2 - p3)) + max(abs(p0 - p2), abs(p1 - p3)) < 1
    condition_b = 0 < min(p0, p3) <= min(p1, p2) <= max(p1, p2) <= max(p0, p3) < 1
    # transcribed as displayed, including its asymmetry in p1, p2 versus p3
    condition_c = (
        max(p1, p2, p3, p1 + p2 - p3) - p3 < p0 / 2 < min(p1, p2, p3, p1 + p2 - p3)
    )
    lower, upper = max(2 * pbar - 1, 0.0), min(2 * pbar, 1.0)
    condition_d = all(lower < p < upper for p in (p0, p1, p2, p3))

    return SpinErgodicityReport(
        condition_a=condition_a,
        condition_b=condition_b,
        condition_c=condition_c,
        condition_d=condition_d,
        pbar=pbar,
    )


def mixed_condition_a(params: Params, gamma: float) -> bool:
    """
    Condition (a) for the biases p_m(gamma), stated on the base biases:
    the same sum of maxima must stay below 1/(1 - gamma). Holds for every
    base vector once gamma > 1/2.
    """
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
    p0, p1, p2, p3 = params.as_tuple()
    return max(abs(p0 - p1), abs(p2 - p3)) + max(abs(p0 - p2), abs(p1 - p3)) < 1 / (1 - gamma)


def transient_summary(N: int, params: Params, limit: Optional[int] = 64) -> dict:
    """JSON-ready description of T; lists at most `limit` states."""
    t = classify_transient(N, params)
    strings = t.strings()
    return {
        "case": t.case_label,
        "exception": t.exception,
        "size": len(strings),
        "states": strings if limit is None else strings[:limit],
        "masks": t.masks if limit is None else t.masks[:limit],
    }
