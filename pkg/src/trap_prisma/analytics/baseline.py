"""
Success probability without loss: the chance that binomial loading yields at least
as many atoms as target traps.
"""

import numpy as np
from scipy.special import betainc, logsumexp
from scipy.stats import binom


def _check_epsilon(epsilon: float) -> None:
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must lie in [0, 1]. Got {epsilon}")


def baseline_success(n_traps: int, epsilon: float, n_target: int) -> float:
    """
    P(Bino(n_traps, epsilon) >= n_target), through the regularized incomplete beta
    function I_eps(k, n - k + 1).
    """
    _check_epsilon(epsilon)
    if n_target <= 0:
        return 1.0
    if n_target > n_traps:
        return 0.0
    if epsilon == 0.0:
        return 0.0
    if epsilon == 1.0:
        return 1.0
    return float(betainc(n_target, n_traps - n_target + 1, epsilon))


def baseline_success_logspace(n_traps: int, epsilon: float, n_target: int) -> float:
    """The same tail summed term by term in log space; a cross-check for the beta form."""
    _check_epsilon(epsilon)
    if n_target <= 0:
        return 1.0
    if n_target > n_traps:
        return 0.0
    k = np.arange(n_target, n_traps + 1)
    with np.errstate(divide="ignore"):
        log_terms = binom.logpmf(k, n_traps, epsilon)
    return float(min(1.0, np.exp(logsumexp(log_terms))))


def largest_certain_target(n_traps: int, epsilon: float, p_min: float = 0.98) -> int:
    """Largest target size whose loading succeeds with probability at least `p_min`."""
    _check_epsilon(epsilon)
    if n_traps < 1:
        return 0
    sizes = np.arange(1, n_traps + 1)
    if epsilon in (0.0, 1.0):
        probabilities = np.full(sizes.shape, epsilon)
    else:
        probabilities = betainc(sizes, n_traps - sizes + 1, epsilon)
    passing = np.flatnonzero(probabilities >= p_min)
    return int(sizes[passing[-1]]) if passing.size else 0
