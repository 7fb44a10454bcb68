from .errors import (
    ConvergenceError,
    FormulaMismatchError,
    NonUniqueStationaryError,
    ParrondoError,
    StructuralError,
)
from .kernels import (
    CompositeKernel,
    GameKernel,
    Params,
    Pattern,
    StateIndex,
    apply,
    cyclic_permutation,
    flip,
    neighbor_code,
    pattern_kernel,
    row_A,
    row_B,
    word_kernel,
)
from .ergodicity import (
    TransientSet,
    brute_force_transient,
    check_cyclic_ergodicity,
    check_spin_ergodicity,
    classify_transient,
    mixed_condition_a,
)
from .profit import (
    Dist,
    ProfitReport,
    lambda_map,
    marginal_1,
    marginal_13,
    mu_B,
    mu_mixed,
    mu_pattern,
    mu_r1_closed_form,
    parrondo_effect,
    stationary,
)
from .montecarlo import (
    SimConfig,
    SimResult,
    convergence_table,
    ring_estimate_mixed,
    simulate_pattern,
    simulate_ring_spin,
)
from .cli import run

__all__ = [
    'ParrondoError', 'StructuralError', 'NonUniqueStationaryError', 'ConvergenceError', 'FormulaMismatchError',
    'Params', 'Pattern', 'StateIndex', 'GameKernel', 'CompositeKernel',
    'neighbor_code', 'flip', 'row_A', 'row_B', 'apply', 'word_kernel', 'pattern_kernel', 'cyclic_permutation',
    'TransientSet', 'classify_transient', 'brute_force_transient', 'check_cyclic_ergodicity',
    'check_spin_ergodicity', 'mixed_condition_a',
    'Dist', 'ProfitReport', 'stationary', 'marginal_1', 'marginal_13', 'mu_B', 'mu_mixed', 'mu_pattern',
    'lambda_map', 'mu_r1_closed_form', 'parrondo_effect',
    'SimConfig', 'SimResult', 'simulate_pattern', 'simulate_ring_spin', 'ring_estimate_mixed', 'convergence_table',
    'run',
]
