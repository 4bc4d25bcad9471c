"""Composable finite-key rates for coherent-state twin-field QKD."""

from .bounds import (
    DomainError,
    TailSolution,
    baseline_curty,
    baseline_gaussian,
    baseline_sampling_analytic,
    baseline_sampling_fung,
    chernoff_delta_lower,
    chernoff_delta_upper,
    expected_lower,
    expected_upper,
    ln_binomial,
    sampling_gamma_lower,
    sampling_gamma_upper,
)
from .channel import SystemConfig, arm_efficiency, decoy_gain, plob_bound, z_basis_observables
from .config import RunConfig
from .decoy import DecoySettings, gain_intervals_from_counts, observed_yield_upper, yield_upper_bounds
from .keyrate import (
    KeyRateResult,
    ProtocolParams,
    SecurityBudget,
    binary_entropy,
    evaluate_p1,
    evaluate_p2,
    key_length_p1,
    key_length_p2,
    leak_ec,
)
from .optimize import ParameterSpace, SweepPoint, optimize, sweep

__version__ = "0.1.0"

__all__ = [
    "DomainError",
    "TailSolution",
    "ln_binomial",
    "sampling_gamma_upper",
    "sampling_gamma_lower",
    "chernoff_delta_upper",
    "chernoff_delta_lower",
    "expected_lower",
    "expected_upper",
    "baseline_gaussian",
    "baseline_curty",
    "baseline_sampling_analytic",
    "baseline_sampling_fung",
    "SystemConfig",
    "arm_efficiency",
    "z_basis_observables",
    "decoy_gain",
    "plob_bound",
    "DecoySettings",
    "gain_intervals_from_counts",
    "yield_upper_bounds",
    "observed_yield_upper",
    "SecurityBudget",
    "ProtocolParams",
    "KeyRateResult",
    "binary_entropy",
    "leak_ec",
    "key_length_p1",
    "key_length_p2",
    "evaluate_p1",
    "evaluate_p2",
    "ParameterSpace",
    "SweepPoint",
    "optimize",
    "sweep",
    "RunConfig",
    "__version__",
]
