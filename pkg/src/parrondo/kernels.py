"""
State encoding and the one-step kernels of games A and B on the N-player ring.

A configuration is an N-bit mask; player i (1-based) occupies bit i-1, and
neighbours wrap around (player 0 is player N, player N+1 is player 1).
Kernels are never stored as dense 2^N x 2^N arrays: game kernels keep one
flip-probability table per site and apply themselves to row vectors.
"""
from functools import cached_property
from typing import Iterable, List, NamedTuple, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sp
from pydantic import BaseModel, ConfigDict, Field

from utils.bit_utils import (
    site_tables,
    state_to_string,
    string_to_state,
    tuple_to_state,
    xor_site,
)

from .errors import StructuralError

MIN_RING_SIZE = 3
MAX_RING_SIZE = 18
MAX_DENSE_SIZE = 12
ROW_SUM_TOL = 1e-14


class Params(BaseModel):
    """Coin biases (p0, p1, p2, p3) of game B, indexed by m = 2 x_{i-1} + x_{i+1}."""

    model_config = ConfigDict(frozen=True)

    p0: float = Field(ge=0.0, le=1.0, description="bias when both neighbours lost")
    p1: float = Field(ge=0.0, le=1.0, description="bias when only the right neighbour won")
    p2: float = Field(ge=0.0, le=1.0, description="bias when only the left neighbour won")
    p3: float = Field(ge=0.0, le=1.0, description="bias when both neighbours won")

    @classmethod
    def from_sequence(cls, values: Sequence[float]) -> "Params":
        values = [float(v) for v in values]
        if len(values) != 4:
            raise ValueError(f"Expected 4 probabilities, got {len(values)}")
        return cls(p0=values[0], p1=values[1], p2=values[2], p3=values[3])

    @classmethod
    def from_string(cls, text: str) -> "Params":
        try:
            values = [float(v) for v in text.split(",")]
        except ValueError as e:
            raise ValueError(f"Cannot parse probability vector {text!r}: {e}") from e
        return cls.from_sequence(values)

    @classmethod
    def fair(cls) -> "Params":
        return cls(p0=0.5, p1=0.5, p2=0.5, p3=0.5)

    def as_tuple(self) -> Tuple[float, float, float, float]:
        return (self.p0, self.p1, self.p2, self.p3)

    @property
    def p(self) -> np.ndarray:
        return np.array(self.as_tuple(), dtype=np.float64)

    @property
    def q(self) -> np.ndarray:
        return 1.0 - self.p

    @property
    def payoff(self) -> np.ndarray:
        """Expected payoff p_m - q_m of one play for each neighbour code m."""
        return self.p - self.q

    def mixed(self, gamma: float) -> "Params":
        """Biases of the gamma-mixture of A and B: p_m(gamma) = gamma/2 + (1-gamma) p_m."""
        if not 0.0 < gamma < 1.0:
            raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
        return Params.from_sequence([gamma * 0.5 + (1.0 - gamma) * p for p in self.as_tuple()])

    def __str__(self) -> str:
        return "(" + ",".join(repr(p) for p in self.as_tuple()) + ")"


class Pattern(BaseModel):
    """The periodic schedule A^r B^s."""

    model_config = ConfigDict(frozen=True)

    r: int = Field(ge=1, description="plays of game A per period")
    s: int = Field(ge=1, description="plays of game B per period")

    @classmethod
    def from_string(cls, text: str) -> "Pattern":
        parts = text.split(",")
        if len(parts) != 2:
            raise ValueError(f"Pattern must look like 'r,s', got {text!r}")
        try:
            r, s = (int(v) for v in parts)
        except ValueError as e:
            raise ValueError(f"Cannot parse pattern {text!r}: {e}") from e
        return cls(r=r, s=s)

    @property
    def period(self) -> int:
        return self.r + self.s

    @property
    def gamma(self) -> float:
        return self.r / (self.r + self.s)

    @property
    def word(self) -> str:
        return "A" * self.r + "B" * self.s

    def cyclic_word(self, which: int) -> str:
        """Factor order of the which-th cyclic permutation (1..r+s) of A^r B^s."""
        if not 1 <= which <= self.period:
            raise ValueError(f"which must lie in 1..{self.period}, got {which}")
        word = self.word
        return word[which:] + word[:which]

    def __str__(self) -> str:
        return f"[{self.r},{self.s}]"


class StateIndex(NamedTuple):
    bits: int
    N: int

    @classmethod
    def of(cls, bits: int, N: int) -> "StateIndex":
        _check_ring_size(N)
        if not 0 <= bits < (1 << N):
            raise ValueError(f"State {bits} out of range for N={N}")
        return cls(int(bits), int(N))

    @classmethod
    def from_tuple(cls, values: Iterable[int]) -> "StateIndex":
        values = list(values)
        return cls.of(tuple_to_state(values), len(values))

    @classmethod
    def from_string(cls, text: str) -> "StateIndex":
        return cls.of(string_to_state(text), len(text.strip()))

    def player(self, i: int) -> int:
        """Status x_i with the cyclic convention x_0 = x_N, x_{N+1} = x_1."""
        return (self.bits >> ((i - 1) % self.N)) & 1

    def __str__(self) -> str:
        return state_to_string(self.bits, self.N)


Transition = Tuple[StateIndex, float]


def _check_ring_size(N: int) -> None:
    if not MIN_RING_SIZE <= N <= MAX_RING_SIZE:
        raise ValueError(f"Ring size must lie in [{MIN_RING_SIZE}, {MAX_RING_SIZE}], got {N}")


def _check_player(x: StateIndex, i: int) -> None:
    if not 1 <= i <= x.N:
        raise ValueError(f"Player index must lie in 1..{x.N}, got {i}")


def _as_state(x: Union[StateIndex, int], N: int) -> StateIndex:
    if isinstance(x, StateIndex):
        if x.N != N:
            raise ValueError(f"State has N={x.N}, kernel has N={N}")
        return x
    return StateIndex.of(x, N)


def neighbor_code(x: StateIndex, i: int) -> int:
    """m_i(x) = 2 x_{i-1} + x_{i+1}."""
    _check_player(x, i)
    return 2 * x.player(i - 1) + x.player(i + 1)


def flip(x: StateIndex, i: int) -> StateIndex:
    """x^i: x with player i's status toggled."""
    _check_player(x, i)
    return StateIndex(x.bits ^ (1 << (i - 1)), x.N)


def _holding_probability(counts: np.ndarray, params: Params, N: int) -> np.ndarray:
    """
    Diagonal entry from counts[b, m] = #{i : x_i = b, m_i(x) = m}.
    Terms for m = 1 and m = 2 are added first so the value is unchanged by a
    reflection when p1 = p2.
    """
    p, q = params.p, params.q
    s = [counts[0, m] * q[m] + counts[1, m] * p[m] for m in range(4)]
    return (s[0] + (s[1] + s[2]) + s[3]) / N


def row_B(N: int, params: Params, x: Union[StateIndex, int]) -> List[Transition]:
    """Nonzero entries of row x of P_B: flips in player order, then the diagonal."""
    _check_ring_size(N)
    x = _as_state(x, N)
    p, q = params.p, params.q
    row = []
    counts = np.zeros((2, 4), dtype=np.int64)
    for i in range(1, N + 1):
        m = neighbor_code(x, i)
        b = x.player(i)
        counts[b, m] += 1
        prob = (p[m] if b == 0 else q[m]) / N
        if prob > 0.0:
            row.append((flip(x, i), float(prob)))
    stay = float(_holding_probability(counts, params, N))
    if stay > 0.0:
        row.append((x, stay))
    return row


def row_A(N: int, x: Union[StateIndex, int]) -> List[Transition]:
    return row_B(N, Params.fair(), x)


class GameKernel:
    """
    One play of game A or game B on the N-player ring.

    flip[i, x] holds P(x, x^{i+1}) and stay[x] holds P(x, x); the kernel acts
    on row vectors (d -> d P) through `apply_array`.
    """

    def __init__(self, N: int, params: Params, kind: str = "B"):
        _check_ring_size(N)
        if kind not in ("A", "B"):
            raise ValueError(f"Unknown game kind {kind!r}")
        self.N = N
        self.size = 1 << N
        self.params = params
        self.kind = kind

    @classmethod
    def game_a(cls, N: int) -> "GameKernel":
        return cls(N, Params.fair(), kind="A")

    @classmethod
    def game_b(cls, N: int, params: Params) -> "GameKernel":
        return cls(N, params, kind="B")

    def __repr__(self) -> str:
        if self.kind == "A":
            return f"GameKernel(A, N={self.N})"
        return f"GameKernel(B, N={self.N}, params={self.params})"

    @cached_property
    def _tables(self) -> Tuple[np.ndarray, np.ndarray]:
        bits, codes = site_tables(self.N)
        p, q = self.params.p, self.params.q
        flip_prob = np.where(bits == 0, p[codes], q[codes]) / self.N
        counts = np.empty((2, 4, self.size), dtype=np.int64)
        for b in range(2):
            for m in range(4):
                counts[b, m] = np.count_nonzero((bits == b) & (codes == m), axis=0)
        stay = _holding_probability(counts, self.params, self.N)
        drift = np.abs(flip_prob.sum(axis=0) + stay - 1.0).max()
        if drift > ROW_SUM_TOL:
            raise StructuralError(f"Rows of {self!r} sum to 1 only within {drift:.3e}")
        flip_prob.setflags(write=False)
        stay.setflags(write=False)
        return flip_prob, stay

    @property
    def factors(self) -> List[Tuple["GameKernel", int]]:
        return [(self, 1)]

    def row(self, x: Union[StateIndex, int]) -> List[Transition]:
        return row_B(self.N, self.params, x)

    def apply_array(self, weights: np.ndarray) -> np.ndarray:
        w = np.asarray(weights, dtype=np.float64)
        if w.shape[-1] != self.size:
            raise ValueError(f"Vector of length {w.shape[-1]} does not match 2^{self.N} states")
        flip_prob, stay = self._tables
        out = w * stay
        for i in range(self.N):
            out += xor_site(w * flip_prob[i], i)
        return out

    def to_dense(self) -> np.ndarray:
        if self.N > MAX_DENSE_SIZE:
            raise ValueError(f"Dense kernels are limited to N <= {MAX_DENSE_SIZE}")
        return self.apply_array(np.eye(self.size))

    def support(self) -> sp.csr_matrix:
        """
        Boolean adjacency of the kernel. An entry exists iff its probability
        is positive, decided by exact tests on p_m and q_m.
        """
        bits, codes = site_tables(self.N)
        p = self.params.p
        can_win = (p > 0.0)[codes]
        can_lose = (p < 1.0)[codes]
        moves = np.where(bits == 0, can_win, can_lose)
        holds = np.where(bits == 0, can_lose, can_win).any(axis=0)
        states = np.arange(self.size, dtype=np.int64)
        rows = [states[holds]]
        cols = [states[holds]]
        for i in range(self.N):
            rows.append(states[moves[i]])
            cols.append(states[moves[i]] ^ (1 << i))
        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        data = np.ones(rows.shape[0], dtype=bool)
        return sp.csr_matrix((data, (rows, cols)), shape=(self.size, self.size))


class CompositeKernel:
    """
    Product of game kernels with multiplicities, applied left to right:
    [(P_A, r), (P_B, s)] is P_A^r P_B^s.
    """

    def __init__(self, factors: Sequence[Tuple[GameKernel, int]]):
        factors = list(factors)
        if not factors:
            raise ValueError("A composite kernel needs at least one factor")
        sizes = {k.N for k, _ in factors}
        if len(sizes) != 1:
            raise ValueError(f"Factors disagree on ring size: {sorted(sizes)}")
        for _, mult in factors:
            if mult < 0:
                raise ValueError(f"Multiplicities must be nonnegative, got {mult}")
        if sum(mult for _, mult in factors) == 0:
            raise ValueError("A composite kernel needs at least one play")
        self.factors = factors
        self.N = factors[0][0].N
        self.size = 1 << self.N
        self.kind = "Composition"

    def __repr__(self) -> str:
        parts = " ".join(f"{k.kind}^{m}" for k, m in self.factors)
        return f"CompositeKernel({parts}, N={self.N})"

    def apply_array(self, weights: np.ndarray) -> np.ndarray:
        out = np.asarray(weights, dtype=np.float64)
        if out.shape[-1] != self.size:
            raise ValueError(f"Vector of length {out.shape[-1]} does not match 2^{self.N} states")
        for kernel, mult in self.factors:
            for _ in range(mult):
                out = kernel.apply_array(out)
        return out

    def row(self, x: Union[StateIndex, int]) -> List[Transition]:
        x = _as_state(x, self.N)
        point = np.zeros(self.size)
        point[x.bits] = 1.0
        out = self.apply_array(point)
        return [(StateIndex(int(y), self.N), float(out[y])) for y in np.flatnonzero(out > 0.0)]

    def to_dense(self) -> np.ndarray:
        if self.N > MAX_DENSE_SIZE:
            raise ValueError(f"Dense kernels are limited to N <= {MAX_DENSE_SIZE}")
        return self.apply_array(np.eye(self.size))

    def support(self) -> sp.csr_matrix:
        out = None
        for kernel, mult in self.factors:
            step = kernel.support().astype(np.int64)
            for _ in range(mult):
                out = step if out is None else ((out @ step) > 0).astype(np.int64)
        return out.astype(bool).tocsr()


Kernel = Union[GameKernel, CompositeKernel]


def apply(kernel: Kernel, d):
    """d P in the row-vector convention; accepts an ndarray or a Dist."""
    if isinstance(d, np.ndarray):
        return kernel.apply_array(d)
    if d.N != kernel.N:
        raise ValueError(f"Distribution has N={d.N}, kernel has N={kernel.N}")
    return d.with_weights(kernel.apply_array(d.weights))


def word_kernel(N: int, params: Params, word: str) -> CompositeKernel:
    """Kernel for a word over {A, B}, e.g. 'AAB' is P_A^2 P_B."""
    if not word or any(c not in "AB" for c in word):
        raise ValueError(f"Word must be a nonempty string over 'A' and 'B', got {word!r}")
    games = {"A": GameKernel.game_a(N), "B": GameKernel.game_b(N, params)}
    factors = []
    for c in word:
        if factors and factors[-1][0] is games[c]:
            factors[-1] = (games[c], factors[-1][1] + 1)
        else:
            factors.append((games[c], 1))
    return CompositeKernel(factors)


def pattern_kernel(N: int, params: Params, pattern: Pattern) -> CompositeKernel:
    return word_kernel(N, params, pattern.word)


def cyclic_permutation(N: int, params: Params, pattern: Pattern, which: int) -> CompositeKernel:
    """P_which, the which-th cyclic permutation of P_A^r P_B^s (P_{r+s} = P_A^r P_B^s)."""
    return word_kernel(N, params, pattern.cyclic_word(which))
