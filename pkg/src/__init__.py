from .parrondo import Params, Pattern, mu_B, mu_mixed, mu_pattern, classify_transient, simulate_pattern

__all__ = ['Params', 'Pattern', 'mu_B', 'mu_mixed', 'mu_pattern', 'classify_transient', 'simulate_pattern']
