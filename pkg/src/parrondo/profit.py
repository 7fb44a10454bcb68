"""
Stationary distributions and exact mean profits per turn.

mu_B and mu_mixed average the payoff field p_{m_i(x)} - q_{m_i(x)} under the
stationary law of a single game-B kernel. mu_pattern evaluates the four
equivalent expressions for the periodic schedule A^r B^s from the staged
distributions pi P_A^u (u = 0..r) and pi P_A^r P_B^v (v = 0..s-1).
"""
import sys
import warnings
from functools import lru_cache
from typing import Dict, List, Literal, Optional, Tuple, Union

import numpy as np
import scipy.linalg
from pydantic import BaseModel, Field
from tqdm import tqdm

from utils.bit_utils import site_tables
from .errors import ConvergenceError, FormulaMismatchError, NonUniqueStationaryError
from .kernels import (
    MAX_DENSE_SIZE,
    GameKernel,
    Kernel,
    Params,
    Pattern,
    StateIndex,
    pattern_kernel,
)
from .report_utils import print_solver_breakdown

MAX_DIRECT_SIZE = MAX_DENSE_SIZE
DIST_SUM_TOL = 1e-12
DIST_CLAMP_TOL = 1e-16
RESIDUAL_TOL = 1e-12
POWER_STEP_TOL = 1e-13
POWER_AGREE_TOL = 1e-11
POWER_DISAGREE_TOL = 1e-9
# roundoff allowance for solver output before clamping; a more negative weight means a singular system
SOLVER_NEGATIVE_TOL = 1e-12
FORMULA_TOL = 1e-10
EFFECT_TOL = 1e-12
DEFAULT_MAX_ITER = 10**7
REPORT_EVERY = 1000

Method = Literal["auto", "direct", "power"]
Formula = Literal["mu1", "mu2", "mu3", "mu4", "all"]


class SolverDiagnostics(BaseModel):
    method: str
    iterations: int = 0
    residual: float = 0.0
    start_gap: Optional[float] = None


class Dist:
    """Probability vector over the 2^N configurations, indexed by bitmask."""

    def __init__(self, N: int, weights: np.ndarray, diagnostics: Optional[SolverDiagnostics] = None):
        weights = np.array(weights, dtype=np.float64)
        if weights.shape != (1 << N,):
            raise ValueError(f"Expected {1 << N} weights for N={N}, got shape {weights.shape}")
        if weights.min() < -DIST_CLAMP_TOL:
            raise ValueError(f"Negative weight {weights.min()!r} in a probability vector")
        weights[weights < 0.0] = 0.0
        total = weights.sum()
        if abs(total - 1.0) > DIST_SUM_TOL:
            raise ValueError(f"Weights sum to {total!r}, not 1")
        weights.setflags(write=False)
        self.N = N
        self.weights = weights
        self.diagnostics = diagnostics

    @classmethod
    def uniform(cls, N: int) -> "Dist":
        return cls(N, np.full(1 << N, 1.0 / (1 << N)))

    @classmethod
    def point_mass(cls, N: int, x: Union[StateIndex, int, str]) -> "Dist":
        weights = np.zeros(1 << N)
        weights[_bits(x)] = 1.0
        return cls(N, weights)

    def with_weights(self, weights: np.ndarray) -> "Dist":
        return Dist(self.N, weights)

    def __getitem__(self, x: Union[StateIndex, int, str]) -> float:
        return float(self.weights[_bits(x)])

    def __repr__(self) -> str:
        return f"Dist(N={self.N})"


def _bits(x: Union[StateIndex, int, str]) -> int:
    if isinstance(x, StateIndex):
        return x.bits
    if isinstance(x, str):
        return StateIndex.from_string(x).bits
    return int(x)


class Marginal13:
    """Joint law of (x_1, x_3); values[w, z] = P(x_1 = w, x_3 = z)."""

    def __init__(self, values: np.ndarray):
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (2, 2):
            raise ValueError(f"Expected a 2x2 table, got shape {values.shape}")
        self.values = values

    def __getitem__(self, wz: Tuple[int, int]) -> float:
        return float(self.values[wz])

    def expected_payoff(self, params: Params) -> float:
        """sum_{w,z} values[w, z] (p_{2w+z} - q_{2w+z})."""
        payoff = params.payoff
        v = self.values
        return float(v[0, 0] * payoff[0] + v[0, 1] * payoff[1] + v[1, 0] * payoff[2] + v[1, 1] * payoff[3])


class ProfitReport(BaseModel):
    mode: Literal["pure_b", "mixed", "pattern"]
    N: int
    params: Params
    pattern: Optional[Pattern] = None
    gamma: Optional[float] = None
    mu: float
    per_formula: Dict[str, float] = Field(default_factory=dict)
    diagnostics: SolverDiagnostics


def _clean(weights: np.ndarray) -> np.ndarray:
    weights = np.where(weights < 0.0, 0.0, weights)
    return weights / weights.sum()


def residual(kernel: Kernel, weights: np.ndarray) -> float:
    """L1 norm of pi K - pi."""
    return float(np.abs(kernel.apply_array(weights) - weights).sum())


def _solve_direct(kernel: Kernel, verbose: bool) -> Tuple[np.ndarray, SolverDiagnostics]:
    size = kernel.size
    system = np.eye(size) - kernel.to_dense().T
    system[-1, :] = 1.0
    rhs = np.zeros(size)
    rhs[-1] = 1.0
    with warnings.catch_warnings():
        warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
        try:
            weights = scipy.linalg.solve(system, rhs)
            # one step of iterative refinement
            weights = weights + scipy.linalg.solve(system, rhs - system @ weights)
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgWarning) as e:
            raise NonUniqueStationaryError(f"Balance equations of {kernel!r} are singular: {e}") from e
    if weights.min() < -SOLVER_NEGATIVE_TOL:
        raise NonUniqueStationaryError(
            f"Direct solve for {kernel!r} produced a negative weight {weights.min():.3e}"
        )
    weights = _clean(weights)
    res = residual(kernel, weights)
    if verbose:
        print_solver_breakdown("direct", 0, 0.0, residual=res)
    return weights, SolverDiagnostics(method="direct", residual=res)


def _iterate(
    kernel: Kernel,
    start: np.ndarray,
    max_iter: int,
    label: str,
    verbose: bool,
) -> Tuple[np.ndarray, int]:
    d = start
    with tqdm(total=max_iter, desc=label, file=sys.stderr, disable=not verbose, leave=False) as pbar:
        for it in range(1, max_iter + 1):
            nxt = kernel.apply_array(d)
            step = np.abs(nxt - d).sum()
            d = nxt
            if verbose and it % REPORT_EVERY == 0:
                pbar.update(REPORT_EVERY)
                print_solver_breakdown(label, it, step)
            if step < POWER_STEP_TOL:
                return d, it
    raise ConvergenceError(f"Power iteration for {kernel!r} did not converge in {max_iter} iterations")


def _solve_power(kernel: Kernel, max_iter: int, verbose: bool) -> Tuple[np.ndarray, SolverDiagnostics]:
    first, it1 = _iterate(kernel, np.full(kernel.size, 1.0 / kernel.size), max_iter, "power/uniform", verbose)
    point = np.zeros(kernel.size)
    point[int(np.argmax(first))] = 1.0
    second, it2 = _iterate(kernel, point, max_iter, "power/point", verbose)
    iterations = it1 + it2
    gap = float(np.abs(first - second).sum())
    if gap >= POWER_DISAGREE_TOL:
        raise NonUniqueStationaryError(
            f"Power iteration for {kernel!r} reached two limits {gap:.3e} apart in L1"
        )
    while gap > POWER_AGREE_TOL:
        if iterations >= max_iter:
            raise ConvergenceError(
                f"Power iteration starts for {kernel!r} still {gap:.3e} apart after {iterations} iterations"
            )
        first = kernel.apply_array(first)
        second = kernel.apply_array(second)
        iterations += 1
        gap = float(np.abs(first - second).sum())
        if verbose and iterations % REPORT_EVERY == 0:
            print_solver_breakdown("power/polish", iterations, 0.0, gap=gap)
    weights = _clean(first)
    res = residual(kernel, weights)
    if verbose:
        print_solver_breakdown("power", iterations, 0.0, gap=gap, residual=res)
    return weights, SolverDiagnostics(method="power", iterations=iterations, residual=res, start_gap=gap)


def stationary(
    kernel: Kernel,
    method: Method = "auto",
    max_iter: int = DEFAULT_MAX_ITER,
    verbose: bool = False,
) -> Dist:
    """
    Stationary distribution pi of `kernel` (pi K = pi).

    Args:
        kernel: game or composite kernel
        method: "direct" (dense solve, N <= 12), "power", or "auto" (direct when it applies)
        max_iter: iteration cap for the power method
        verbose: print solver progress to stderr

    Returns:
        Dist with `diagnostics` attached.
    """
    if method == "auto":
        method = "direct" if kernel.N <= MAX_DIRECT_SIZE else "power"
    if method == "direct":
        if kernel.N > MAX_DIRECT_SIZE:
            raise ValueError(f"Direct solve is limited to N <= {MAX_DIRECT_SIZE}, got N={kernel.N}")
        weights, diagnostics = _solve_direct(kernel, verbose)
    elif method == "power":
        weights, diagnostics = _solve_power(kernel, max_iter, verbose)
    else:
        raise ValueError(f"Unknown method {method!r}")
    if diagnostics.residual > RESIDUAL_TOL:
        raise ConvergenceError(
            f"Stationary residual {diagnostics.residual:.3e} for {kernel!r} exceeds {RESIDUAL_TOL}"
        )
    return Dist(kernel.N, weights, diagnostics)


def marginal_1(d: Dist, site: int = 1) -> Tuple[float, float]:
    """(P(x_site = 0), P(x_site = 1))."""
    if not 1 <= site <= d.N:
        raise ValueError(f"Site must lie in 1..{d.N}, got {site}")
    table = d.weights.reshape(-1, 2, 1 << (site - 1)).sum(axis=(0, 2))
    return float(table[0]), float(table[1])


def marginal_13(d: Dist) -> Marginal13:
    # axes after reshape: (higher bits, x_3, x_2, x_1)
    table = d.weights.reshape(-1, 2, 2, 2).sum(axis=(0, 2))
    return Marginal13(table.T)


@lru_cache(maxsize=64)
def _payoff_field(N: int, params: Params) -> np.ndarray:
    _, codes = site_tables(N)
    field = params.payoff[codes].sum(axis=0) / N
    field.setflags(write=False)
    return field


def payoff_field(N: int, params: Params) -> np.ndarray:
    """(1/N) sum_i (p_{m_i(x)} - q_{m_i(x)}) for every configuration x."""
    return _payoff_field(N, params)


def expected_payoff(d: Dist, params: Params) -> float:
    """Mean payoff of one play of game B from configuration law d."""
    return float(d.weights @ payoff_field(d.N, params))


def site1_bias(d: Dist) -> float:
    low, high = marginal_1(d, 1)
    return high - low


def check_agreement(per_formula: Dict[str, float], tol: float = FORMULA_TOL) -> None:
    values = list(per_formula.items())
    ref_name, ref = values[0]
    for name, value in values[1:]:
        if abs(value - ref) > tol:
            raise FormulaMismatchError(f"{name} = {value!r} disagrees with {ref_name} = {ref!r} beyond {tol}")


def mu_B(N: int, params: Params, method: Method = "auto", verbose: bool = False) -> ProfitReport:
    """Mean profit per turn of game B played alone on N players."""
    pi = stationary(GameKernel.game_b(N, params), method=method, verbose=verbose)
    per_formula = {
        "mu1": expected_payoff(pi, params),
        "mu2": marginal_13(pi).expected_payoff(params),
    }
    check_agreement(per_formula)
    return ProfitReport(
        mode="pure_b",
        N=N,
        params=params,
        mu=per_formula["mu1"],
        per_formula=per_formula,
        diagnostics=pi.diagnostics,
    )


def game_b_baseline(
    N: int, params: Params, method: Method = "auto", verbose: bool = False
) -> Tuple[Optional[float], Optional[str]]:
    """
    mu of game B alone for comparison with a combined schedule. Returns
    (None, note) when B alone has more than one stationary law, as for
    p0 = 0, p3 = 1 where both constant configurations absorb.
    """
    try:
        return mu_B(N, params, method=method, verbose=verbose).mu, None
    except NonUniqueStationaryError as e:
        return None, f"game B alone has no unique stationary law, so no Parrondo effect is reported: {e}"


def mu_mixed(N: int, params: Params, gamma: float, method: Method = "auto", verbose: bool = False) -> ProfitReport:
    """Mean profit of the random mixture: game B at biases p_m(gamma)."""
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
    report = mu_B(N, params.mixed(gamma), method=method, verbose=verbose)
    return report.model_copy(update={"mode": "mixed", "params": params, "gamma": gamma})


def staged_distributions(pi: Dist, N: int, params: Params, pattern: Pattern) -> Tuple[List[Dist], List[Dist]]:
    """
    ([pi P_A^u for u = 0..r], [pi P_A^r P_B^v for v = 0..s-1]).
    """
    game_a = GameKernel.game_a(N)
    game_b = GameKernel.game_b(N, params)
    a_stages = [pi]
    for _ in range(pattern.r):
        a_stages.append(a_stages[-1].with_weights(game_a.apply_array(a_stages[-1].weights)))
    b_stages = [a_stages[-1]]
    for _ in range(pattern.s - 1):
        b_stages.append(b_stages[-1].with_weights(game_b.apply_array(b_stages[-1].weights)))
    return a_stages, b_stages


def _mu4_prefactor(N: int, r: int) -> float:
    keep = 1.0 - 1.0 / N
    return N * (1.0 - keep ** (r + 1)) / ((r + 1) * keep**r)


def mu_pattern(
    N: int,
    params: Params,
    pattern: Pattern,
    formula: Formula = "all",
    method: Method = "auto",
    verbose: bool = False,
) -> ProfitReport:
    """
    Mean profit per turn of the periodic schedule A^r B^s.

    formula selects one expression or "all", which evaluates every applicable
    one (mu4 only when s == 1) and checks that they agree within FORMULA_TOL.
    """
    if formula == "mu4" and pattern.s != 1:
        raise ValueError(f"mu4 requires s = 1, got pattern {pattern}")
    if formula not in ("mu1", "mu2", "mu3", "mu4", "all"):
        raise ValueError(f"Unknown formula {formula!r}")

    pi = stationary(pattern_kernel(N, params, pattern), method=method, verbose=verbose)
    a_stages, b_stages = staged_distributions(pi, N, params, pattern)
    period = pattern.period
    wanted = ("mu1", "mu2", "mu3", "mu4") if formula == "all" else (formula,)

    per_formula: Dict[str, float] = {}
    if "mu1" in wanted:
        per_formula["mu1"] = sum(expected_payoff(d, params) for d in b_stages) / period
    if "mu2" in wanted:
        per_formula["mu2"] = sum(marginal_13(d).expected_payoff(params) for d in b_stages) / period
    if "mu3" in wanted:
        biases = [site1_bias(d) for d in a_stages[:-1]] + [site1_bias(d) for d in b_stages]
        per_formula["mu3"] = sum(biases) / period
    if "mu4" in wanted and pattern.s == 1:
        per_formula["mu4"] = _mu4_prefactor(N, pattern.r) * site1_bias(a_stages[-1])

    if formula == "all":
        check_agreement(per_formula)
    return ProfitReport(
        mode="pattern",
        N=N,
        params=params,
        pattern=pattern,
        gamma=pattern.gamma,
        mu=next(iter(per_formula.values())),
        per_formula=per_formula,
        diagnostics=pi.diagnostics,
    )


def lambda_map(params: Params) -> Params:
    """(p0, p1, p2, p3) -> (q3, q2, q1, q0); exchanges the roles of wins and losses."""
    p0, p1, p2, p3 = params.as_tuple()
    return Params(p0=1.0 - p3, p1=1.0 - p2, p2=1.0 - p1, p3=1.0 - p0)


def mu_r1_closed_form(N: int, params: Params, r: int, method: Method = "auto") -> float:
    """
    mu for the schedule A^r B when p0 = 1, p1 = p2 and p3 = 0, written through
    the (0, 1) entry of the 1,3 marginal of pi P_A^r.
    """
    p0, p1, p2, p3 = params.as_tuple()
    if not (p0 == 1.0 and p1 == p2 and p3 == 0.0):
        raise ValueError(f"Closed form needs p0 = 1, p1 = p2, p3 = 0; got {params}")
    if r < 1:
        raise ValueError(f"r must be at least 1, got {r}")
    pattern = Pattern(r=r, s=1)
    pi = stationary(pattern_kernel(N, params, pattern), method=method)
    a_stages, _ = staged_distributions(pi, N, params, pattern)
    corner = marginal_13(a_stages[-1])[0, 1]
    keep = 1.0 - 1.0 / N
    factor = 1.0 + keep**r / (N * (1.0 - keep ** (r + 1)))
    return 2.0 * (2.0 * p1 - 1.0) / (r + 1) / factor * corner


def parrondo_effect(mu_b: float, mu_combined: float, tol: float = EFFECT_TOL) -> str:
    """
    'parrondo' when B alone is losing or fair but the combination wins,
    'anti-parrondo' for the reversed signs, else 'none'. Values within tol
    of zero count as zero.
    """
    b = 0.0 if abs(mu_b) <= tol else mu_b
    c = 0.0 if abs(mu_combined) <= tol else mu_combined
    if b <= 0.0 < c:
        return "parrondo"
    if b >= 0.0 > c:
        return "anti-parrondo"
    return "none"

