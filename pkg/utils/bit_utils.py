"""
Bitmask helpers for ring configurations.

Player i (1-based) lives in bit i-1. Strings are written x_1 x_2 ... x_N from
left to right, so "0101" means x_2 = x_4 = 1.
"""
from functools import lru_cache
from typing import Iterable, List, Tuple

import numpy as np


def state_to_string(state: int, N: int) -> str:
    return "".join(str((state >> k) & 1) for k in range(N))


def string_to_state(text: str) -> int:
    text = text.strip()
    if not text or any(c not in "01" for c in text):
        raise ValueError(f"Not a 0/1 string: {text!r}")
    return sum(1 << k for k, c in enumerate(text) if c == "1")


def tuple_to_state(bits: Iterable[int]) -> int:
    state = 0
    for k, b in enumerate(bits):
        if b not in (0, 1):
            raise ValueError(f"Bit values must be 0 or 1, got {b}")
        state |= b << k
    return state


def state_to_tuple(state: int, N: int) -> Tuple[int, ...]:
    return tuple((state >> k) & 1 for k in range(N))


def rotate(state: int, N: int, shift: int = 1) -> int:
    """Cyclic relabelling: new player i+shift holds old player i's status."""
    shift %= N
    mask = (1 << N) - 1
    return ((state << shift) | (state >> (N - shift))) & mask


def reflect(state: int, N: int) -> int:
    """Order-reversing relabelling x_i -> x_{N+1-i}."""
    out = 0
    for k in range(N):
        if (state >> k) & 1:
            out |= 1 << (N - 1 - k)
    return out


def periodic_state(motif: str, N: int) -> int:
    """Repeat a motif string around the ring; len(motif) must divide N."""
    if N % len(motif):
        raise ValueError(f"Motif {motif!r} does not tile a ring of size {N}")
    return string_to_state(motif * (N // len(motif)))


def rotation_orbit(state: int, N: int) -> List[int]:
    return sorted({rotate(state, N, k) for k in range(N)})


def cyclic_runs(state: int, N: int) -> List[Tuple[int, int]]:
    """
    Maximal runs of equal bits around the ring as (bit, length) pairs.
    A constant configuration is a single run of length N.
    """
    bits = state_to_tuple(state, N)
    start = next((k for k in range(N) if bits[k] != bits[k - 1]), None)
    if start is None:
        return [(bits[0], N)]
    runs = []
    k = 0
    while k < N:
        b = bits[(start + k) % N]
        length = 0
        while k < N and bits[(start + k) % N] == b:
            length += 1
            k += 1
        runs.append((b, length))
    return runs


@lru_cache(maxsize=None)
def site_tables(N: int):
    """
    Per-site tables over all 2^N states, shape (N, 2^N):
    own bit x_i and neighbour code m_i = 2 x_{i-1} + x_{i+1} (cyclic).
    """
    states = np.arange(1 << N, dtype=np.int64)
    bits = ((states[None, :] >> np.arange(N, dtype=np.int64)[:, None]) & 1).astype(np.int8)
    left = np.roll(bits, 1, axis=0)
    right = np.roll(bits, -1, axis=0)
    codes = (2 * left + right).astype(np.int8)
    bits.setflags(write=False)
    codes.setflags(write=False)
    return bits, codes


def xor_site(values: np.ndarray, site: int) -> np.ndarray:
    """Permute the last axis by state -> state ^ (1 << site)."""
    shape = values.shape
    block = 1 << site
    view = values.reshape(shape[:-1] + (-1, 2, block))
    return view[..., ::-1, :].reshape(shape)
