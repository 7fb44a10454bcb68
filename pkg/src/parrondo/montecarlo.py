"""
Monte Carlo checks of the exact results.

simulate_pattern plays the games turn by turn (one uniformly chosen player
per turn) and averages the +1/-1 payoffs, as in the strong law for
n^{-1} S_n. simulate_ring_spin runs game B on a large ring as a stand-in for
the infinite-lattice spin system and estimates the two-site law of
(x_{i-1}, x_{i+1}) seen by a player.
"""
import math
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from typing import List, Literal, Optional, Sequence, Tuple

import numba
import numpy as np
from pydantic import BaseModel, Field, model_validator
from tqdm import tqdm

from .errors import ParrondoError
from .kernels import MAX_RING_SIZE, MIN_RING_SIZE, Params, Pattern
from .profit import Method, game_b_baseline, mu_mixed, mu_pattern, parrondo_effect
from .rng import ReplicaStream
from .runtime_utils import resolve_workers

CHUNK_TURNS = 1 << 16
MIN_BURN_IN = 10**4
BURN_IN_PER_PLAYER = 100
MIN_REPLICAS_FOR_ERROR = 8
MIN_SPIN_RING = 64

GAME_A = 0
GAME_B = 1


@numba.njit(cache=True, nogil=True)
def _play_turns(state, players, coins, games, probs, payoffs):
    """Play len(players) turns in place; payoffs[t] is +1 for a win, -1 for a loss."""
    n = state.shape[0]
    for t in range(players.shape[0]):
        i = players[t]
        m = 2 * state[(i + n - 1) % n] + state[(i + 1) % n]
        if coins[t] < probs[games[t], m]:
            state[i] = 1
            payoffs[t] = 1
        else:
            state[i] = 0
            payoffs[t] = -1


@numba.njit(cache=True, nogil=True)
def _ring_sweeps(state, players, coins, probs, counts, accumulate):
    """
    Game-B updates on a ring of length L; after every L updates (one sweep)
    add the neighbour codes of all sites to counts when accumulate is set.
    """
    n = state.shape[0]
    for t in range(players.shape[0]):
        i = players[t]
        m = 2 * state[(i + n - 1) % n] + state[(i + 1) % n]
        if coins[t] < probs[m]:
            state[i] = 1
        else:
            state[i] = 0
        if accumulate and (t + 1) % n == 0:
            for j in range(n):
                counts[2 * state[(j + n - 1) % n] + state[(j + 1) % n]] += 1


class SimConfig(BaseModel):
    N: int = Field(ge=MIN_RING_SIZE)
    params: Params
    mode: Literal["pattern", "mixed", "pure_b"]
    pattern: Optional[Pattern] = None
    gamma: Optional[float] = Field(default=None, gt=0.0, lt=1.0)
    mixture: Literal["coin", "mapped"] = "coin"
    turns: int = Field(gt=0)
    burn_in: Optional[int] = Field(default=None, ge=0)
    seed: int = Field(default=0, ge=0, lt=2**64)
    replicas: int = Field(default=MIN_REPLICAS_FOR_ERROR, ge=1)
    checkpoints: int = Field(default=0, ge=0)
    initial_state: Optional[str] = None
    threads: Optional[int] = Field(default=None, ge=1)

    @model_validator(mode="after")
    def check_mode(self) -> "SimConfig":
        if self.mode == "pattern" and self.pattern is None:
            raise ValueError("Pattern mode needs a pattern")
        if self.mode == "mixed" and self.gamma is None:
            raise ValueError("Mixed mode needs gamma")
        if self.burn_in is not None and self.burn_in >= self.turns:
            raise ValueError(f"burn_in ({self.burn_in}) must be smaller than turns ({self.turns})")
        if self.initial_state is not None:
            if len(self.initial_state) != self.N or set(self.initial_state) - {"0", "1"}:
                raise ValueError(f"initial_state must be a 0/1 string of length {self.N}")
        return self

    @property
    def resolved_burn_in(self) -> int:
        if self.burn_in is not None:
            return self.burn_in
        return min(max(MIN_BURN_IN, BURN_IN_PER_PLAYER * self.N), self.turns // 2)

    @property
    def counted_turns(self) -> int:
        return self.turns - self.resolved_burn_in

    def initial_array(self) -> np.ndarray:
        if self.initial_state is None:
            return np.zeros(self.N, dtype=np.int8)
        return np.array([int(c) for c in self.initial_state], dtype=np.int8)

    def probability_table(self) -> np.ndarray:
        """Row GAME_A holds the fair coin, row GAME_B the biases of game B as played."""
        b_params = self.params
        if self.mode == "mixed" and self.mixture == "mapped":
            b_params = self.params.mixed(self.gamma)
        return np.vstack([np.full(4, 0.5), b_params.p])

    def checkpoint_turns(self) -> np.ndarray:
        """Counted-turn indices n (1-based) at which S_n / n is recorded."""
        if self.checkpoints == 0:
            return np.zeros(0, dtype=np.int64)
        grid = np.geomspace(1, self.counted_turns, num=self.checkpoints)
        return np.unique(np.round(grid).astype(np.int64))


class SimResult(BaseModel):
    mean: float
    std_error: float = Field(ge=0.0)
    n_effective: int
    replicas: int
    replica_means: List[float]
    a_fraction: float
    running_means: Optional[List[Tuple[int, float]]] = None


class _ReplicaOutcome:
    __slots__ = ("total", "a_count", "trace")

    def __init__(self, total: int, a_count: int, trace: np.ndarray):
        self.total = total
        self.a_count = a_count
        self.trace = trace


def _schedule(cfg: SimConfig, stream: ReplicaStream, start: int, size: int) -> np.ndarray:
    if cfg.mode == "pattern":
        phase = (np.arange(start, start + size, dtype=np.int64) % cfg.pattern.period)
        return np.where(phase < cfg.pattern.r, GAME_A, GAME_B).astype(np.int8)
    if cfg.mode == "mixed" and cfg.mixture == "coin":
        return np.where(stream.uniforms(size) < cfg.gamma, GAME_A, GAME_B).astype(np.int8)
    return np.full(size, GAME_B, dtype=np.int8)


def _run_replica(cfg: SimConfig, replica: int) -> _ReplicaOutcome:
    stream = ReplicaStream(cfg.seed, replica)
    probs = cfg.probability_table()
    state = cfg.initial_array()
    burn_in = cfg.resolved_burn_in
    marks = cfg.checkpoint_turns()
    trace = np.empty(len(marks), dtype=np.float64)

    total = 0
    a_count = 0
    counted = 0
    turn = 0
    while turn < cfg.turns:
        size = min(CHUNK_TURNS, cfg.turns - turn)
        players = stream.players(size, cfg.N)
        coins = stream.uniforms(size)
        games = _schedule(cfg, stream, turn, size)
        payoffs = np.empty(size, dtype=np.int8)
        _play_turns(state, players, coins, games, probs, payoffs)

        skip = max(burn_in - turn, 0)
        if skip < size:
            kept = payoffs[skip:]
            running = np.cumsum(kept, dtype=np.int64) + total
            in_chunk = (marks > counted) & (marks <= counted + len(kept))
            for k in np.flatnonzero(in_chunk):
                n = marks[k]
                trace[k] = running[n - counted - 1] / n
            total = int(running[-1])
            a_count += int(np.count_nonzero(games[skip:] == GAME_A))
            counted += len(kept)
        turn += size
    return _ReplicaOutcome(total, a_count, trace)


def _replica_error(values: np.ndarray) -> float:
    if len(values) < 2:
        return 0.0
    return float(np.std(values, ddof=1) / math.sqrt(len(values)))


def simulate_pattern(cfg: SimConfig, verbose: bool = False) -> SimResult:
    """
    Long-run average payoff per turn for the configured schedule.

    Replica r uses the stream (cfg.seed, r), so the result is the same for
    any number of worker threads.
    """
    if 1 < cfg.replicas < MIN_REPLICAS_FOR_ERROR:
        warnings.warn(f"Standard error from only {cfg.replicas} replicas is unreliable")
    workers = resolve_workers(cfg.threads, cfg.replicas)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        jobs = pool.map(lambda r: _run_replica(cfg, r), range(cfg.replicas))
        outcomes = list(
            tqdm(jobs, total=cfg.replicas, desc="replicas", file=sys.stderr, disable=not verbose, leave=False)
        )

    counted = cfg.counted_turns
    means = np.array([o.total / counted for o in outcomes])
    running = None
    marks = cfg.checkpoint_turns()
    if len(marks):
        traces = np.mean([o.trace for o in outcomes], axis=0)
        running = [(int(n), float(v)) for n, v in zip(marks, traces)]
    return SimResult(
        mean=float(np.mean(means)),
        std_error=_replica_error(means),
        n_effective=counted * cfg.replicas,
        replicas=cfg.replicas,
        replica_means=[float(m) for m in means],
        a_fraction=sum(o.a_count for o in outcomes) / (counted * cfg.replicas),
        running_means=running,
    )


class RingEstimate(BaseModel):
    L: int
    sweeps: int
    burn_in_sweeps: int
    replicas: int
    marginal_13: List[List[float]]
    marginal_std_error: List[List[float]]
    mu_limit: float
    std_error: float = Field(ge=0.0)


def _run_ring(
    gamma_params: Params,
    L: int,
    sweeps: int,
    burn_in_sweeps: int,
    seed: int,
    replica: int,
) -> np.ndarray:
    stream = ReplicaStream(seed, replica)
    state = stream.bits(L)
    probs = gamma_params.p
    counts = np.zeros(4, dtype=np.int64)
    sweeps_per_chunk = max(1, CHUNK_TURNS // L)
    done = 0
    total = burn_in_sweeps + sweeps
    while done < total:
        # chunks never straddle the end of burn-in
        limit = burn_in_sweeps if done < burn_in_sweeps else total
        n_sweeps = min(sweeps_per_chunk, limit - done)
        size = n_sweeps * L
        players = stream.players(size, L)
        coins = stream.uniforms(size)
        _ring_sweeps(state, players, coins, probs, counts, done >= burn_in_sweeps)
        done += n_sweeps
    return counts / counts.sum()


def simulate_ring_spin(
    gamma_params: Params,
    L: int = 512,
    sweeps: int = 20000,
    burn_in_sweeps: int = 1000,
    seed: int = 0,
    replicas: int = MIN_REPLICAS_FOR_ERROR,
    payoff: Optional[Sequence[float]] = None,
    threads: Optional[int] = None,
    verbose: bool = False,
) -> RingEstimate:
    """
    Translation- and time-averaged law of (x_{i-1}, x_{i+1}) on a ring of L
    players running game B at `gamma_params`, one sweep being L turns.

    mu_limit weights the four neighbour codes by `payoff`, which defaults to
    gamma_params.payoff (p_m(gamma) - q_m(gamma)).
    """
    if L < MIN_SPIN_RING:
        raise ValueError(f"Ring must have at least {MIN_SPIN_RING} sites, got {L}")
    if sweeps < 1 or burn_in_sweeps < 0 or replicas < 1:
        raise ValueError("sweeps and replicas must be positive and burn_in_sweeps nonnegative")
    weights = gamma_params.payoff if payoff is None else np.asarray(payoff, dtype=np.float64)
    if weights.shape != (4,):
        raise ValueError(f"Payoff weights must have 4 entries, got shape {weights.shape}")
    if 1 < replicas < MIN_REPLICAS_FOR_ERROR:
        warnings.warn(f"Standard error from only {replicas} replicas is unreliable")

    workers = resolve_workers(threads, replicas)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        jobs = pool.map(
            lambda r: _run_ring(gamma_params, L, sweeps, burn_in_sweeps, seed, r), range(replicas)
        )
        marginals = np.array(
            list(tqdm(jobs, total=replicas, desc="ring replicas", file=sys.stderr, disable=not verbose, leave=False))
        )

    mus = marginals @ weights
    if replicas > 1:
        marginal_se = np.std(marginals, axis=0, ddof=1) / math.sqrt(replicas)
    else:
        marginal_se = np.zeros(4)
    return RingEstimate(
        L=L,
        sweeps=sweeps,
        burn_in_sweeps=burn_in_sweeps,
        replicas=replicas,
        marginal_13=marginals.mean(axis=0).reshape(2, 2).tolist(),
        marginal_std_error=marginal_se.reshape(2, 2).tolist(),
        mu_limit=float(np.mean(mus)),
        std_error=_replica_error(mus),
    )


def ring_estimate_mixed(params: Params, gamma: float, **kwargs) -> RingEstimate:
    """Ring estimate of the limit of mu_mixed(N, params, gamma) as N grows."""
    return simulate_ring_spin(params.mixed(gamma), **kwargs)


class ConvergenceRow(BaseModel):
    N: int
    mu_pattern: float
    mu_mixed: float
    gap: float
    mu_b: Optional[float] = None
    effect: Optional[str] = None
    note: Optional[str] = None
    error: Optional[str] = None


class ConvergenceTable(BaseModel):
    params: Params
    pattern: Pattern
    gamma: float
    rows: List[ConvergenceRow]
    ring: Optional[RingEstimate] = None

    @property
    def failed(self) -> bool:
        return any(row.error is not None for row in self.rows)


def convergence_table(
    params: Params,
    pattern: Pattern,
    n_values: Sequence[int],
    with_ring: bool = False,
    ring_L: int = 512,
    sweeps: int = 20000,
    burn_in_sweeps: int = 1000,
    seed: int = 0,
    replicas: int = MIN_REPLICAS_FOR_ERROR,
    method: Method = "auto",
    verbose: bool = False,
) -> ConvergenceTable:
    """
    mu for the schedule A^r B^s and for the gamma = r/(r+s) mixture at each N,
    with their gap. A row whose solve fails holds NaN and the error message.
    Rows also carry mu of game B alone and the effect label when B alone has
    a unique stationary law.
    """
    for N in n_values:
        if not MIN_RING_SIZE <= N <= MAX_RING_SIZE:
            raise ValueError(f"N must lie in [{MIN_RING_SIZE}, {MAX_RING_SIZE}], got {N}")
    gamma = pattern.gamma
    rows = []
    for N in tqdm(n_values, desc="N", file=sys.stderr, disable=not verbose, leave=False):
        try:
            periodic = mu_pattern(N, params, pattern, method=method, verbose=verbose).mu
            mixed = mu_mixed(N, params, gamma, method=method, verbose=verbose).mu
        except ParrondoError as e:
            warnings.warn(f"N={N}: {type(e).__name__}: {e}")
            nan = float("nan")
            rows.append(ConvergenceRow(N=N, mu_pattern=nan, mu_mixed=nan, gap=nan, error=f"{type(e).__name__}: {e}"))
            continue
        # a failed game B baseline leaves the row intact
        try:
            b, note = game_b_baseline(N, params, method=method, verbose=verbose)
        except ParrondoError as e:
            b, note = None, f"game B alone: {type(e).__name__}: {e}"
        rows.append(
            ConvergenceRow(
                N=N,
                mu_pattern=periodic,
                mu_mixed=mixed,
                gap=abs(periodic - mixed),
                mu_b=b,
                effect=None if b is None else parrondo_effect(b, periodic),
                note=note,
            )
        )

    ring = None
    if with_ring:
        ring = ring_estimate_mixed(
            params,
            gamma,
            L=ring_L,
            sweeps=sweeps,
            burn_in_sweeps=burn_in_sweeps,
            seed=seed,
            replicas=replicas,
            verbose=verbose,
        )
    return ConvergenceTable(params=params, pattern=pattern, gamma=gamma, rows=rows, ring=ring)
