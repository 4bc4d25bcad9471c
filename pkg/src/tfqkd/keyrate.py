"""Finite-key secret-key lengths for the two coherent-state protocols.

Protocol 1 observes its test-basis error rate directly; the phase error
rate of the key string is that rate plus a sampling-without-replacement
deviation, and the key length follows the four-part secrecy split
eps = upsilon = eps1 = eps_sec / 4.

Protocol 2 cannot observe test-basis errors (the test pulses are
phase-randomized), so the error gain is bounded through the decoy-state
yield estimates; its secrecy budget splits into 31 parts,
2 eps + upsilon + 2 eps1 + 9 eps2 + 17 eps3, and the engine counts every
tail-bound invocation of an evaluation and fails loudly if the tally ever
disagrees with that composition.

All evaluations are pure functions of their inputs; aborts surface as
results with ``aborted=True`` and zero key, never as exceptions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from . import decoy as decoy_mod
from .bounds import sampling_gamma_lower, sampling_gamma_upper
from .channel import SystemConfig, arm_efficiency, decoy_gain, x_basis_observables_p1, z_basis_observables
from .decoy import DecoySettings

__all__ = [
    "SecurityBudget",
    "ProtocolParams",
    "KeyRateResult",
    "BoundUsage",
    "AbortProtocol",
    "binary_entropy",
    "leak_ec",
    "key_length_p1",
    "key_length_p2",
    "phase_error_p1",
    "q_x_lower_p2",
    "error_gain_upper_p2",
    "phase_error_p2",
    "evaluate_p1",
    "evaluate_p2",
]

# Invocation counts implied by the secrecy compositions.
P1_USAGE = (1, 0, 0)  # sampling, chernoff, expected
P2_USAGE = (2, 9, 17)


class AbortProtocol(Exception):
    """Parameter estimation failed; the protocol outputs an empty key."""


@dataclass(frozen=True)
class SecurityBudget:
    """Secrecy and correctness targets with their per-estimate allocation."""

    eps_sec: float
    eps_cor: float
    variant: str  # "p1" or "p2"

    def __post_init__(self) -> None:
        if not 0.0 < self.eps_sec < 1.0:
            raise ValueError(f"eps_sec must lie in (0, 1), got {self.eps_sec}")
        if not 0.0 < self.eps_cor < 1.0:
            raise ValueError(f"eps_cor must lie in (0, 1), got {self.eps_cor}")
        if self.variant not in ("p1", "p2"):
            raise ValueError(f"variant must be 'p1' or 'p2', got {self.variant!r}")

    @property
    def parts(self) -> int:
        return 4 if self.variant == "p1" else 31

    @property
    def eps(self) -> float:
        return self.eps_sec / self.parts

    @property
    def upsilon(self) -> float:
        return self.eps_sec / self.parts

    @property
    def eps1(self) -> float:
        return self.eps_sec / self.parts

    @property
    def eps2(self) -> float:
        if self.variant != "p2":
            raise ValueError("eps2 exists only for the decoy protocol")
        return self.eps_sec / self.parts

    @property
    def eps3(self) -> float:
        if self.variant != "p2":
            raise ValueError("eps3 exists only for the decoy protocol")
        return self.eps_sec / self.parts

    def closure(self) -> float:
        """Total secrecy reassembled from the parts (equals eps_sec)."""
        if self.variant == "p1":
            return 2 * self.eps + self.upsilon + self.eps1
        return 2 * self.eps + self.upsilon + 2 * self.eps1 + 9 * self.eps2 + 17 * self.eps3


@dataclass(frozen=True)
class ProtocolParams:
    """Free protocol parameters; ``decoy`` is required for Protocol 2."""

    mu: float
    p_z: float
    decoy: DecoySettings | None = None

    def __post_init__(self) -> None:
        if self.mu <= 0.0:
            raise ValueError(f"signal intensity must be positive, got {self.mu}")
        if not 0.0 < self.p_z < 1.0:
            raise ValueError(f"p_z must lie in (0, 1), got {self.p_z}")


@dataclass
class BoundUsage:
    """Tally of tail-bound invocations within one evaluation."""

    sampling: int = 0
    chernoff: int = 0
    expected: int = 0

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.sampling, self.chernoff, self.expected)


@dataclass(frozen=True)
class KeyRateResult:
    ell: float
    rate: float
    phi_z: float
    leak_ec: float
    aborted: bool
    e_x_upper: float | None = None
    q_x_lower: float | None = None
    diagnostics: dict = field(default_factory=dict)


def binary_entropy(x: float) -> float:
    """Binary Shannon entropy h(x), continuously extended to h(0)=h(1)=0."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"entropy argument must lie in [0, 1], got {x}")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def leak_ec(n: float, e_z: float, zeta: float) -> float:
    """Error-correction leakage n * zeta * h(E_Z)."""
    if zeta < 1.0:
        raise ValueError(f"error-correction efficiency must be >= 1, got {zeta}")
    return n * zeta * binary_entropy(e_z)


def _key_length(n: float, phi_z: float, leak: float, penalty: float) -> float:
    if not 0.0 <= phi_z <= 0.5:
        raise ValueError(f"phase error rate must lie in [0, 0.5], got {phi_z}")
    raw = n * (1.0 - binary_entropy(phi_z)) - leak - penalty
    return max(0.0, math.floor(raw))


def key_length_p1(n: float, phi_z: float, leak: float, budget: SecurityBudget) -> float:
    """Key length floor(n[1-h(phi_Z)] - leak - log2(2/eps_cor) - 2 log2(2/eps_sec))."""
    penalty = math.log2(2.0 / budget.eps_cor) + 2.0 * math.log2(2.0 / budget.eps_sec)
    return _key_length(n, phi_z, leak, penalty)


def key_length_p2(n: float, phi_z: float, leak: float, budget: SecurityBudget) -> float:
    """As key_length_p1 with the 31-part penalty 2 log2(31/(2 eps_sec))."""
    penalty = math.log2(2.0 / budget.eps_cor) + 2.0 * math.log2(31.0 / (2.0 * budget.eps_sec))
    return _key_length(n, phi_z, leak, penalty)


def phase_error_p1(n: float, k: float, e_x: float, eps1: float, usage: BoundUsage | None = None) -> float:
    """Phase error bound E_X + gamma(n, k, E_X, eps1) for the cat-state protocol.

    The caller clamps to [0, 0.5] for entropy evaluation and aborts above
    the tolerance.
    """
    if n < 1 or k < 1:
        raise AbortProtocol(f"insufficient statistics: n={n}, k={k}")
    if not 0.0 <= e_x <= 1.0:
        raise ValueError(f"observed error rate must lie in [0, 1], got {e_x}")
    sol = sampling_gamma_upper(n, k, e_x, eps1)
    if usage is not None:
        usage.sampling += 1
    if not sol.converged:
        raise AbortProtocol("phase-error deviation solver did not converge")
    return e_x + sol.value


def q_x_lower_p2(q_z: float, n_pulses: float, p_z: float, eps1: float, usage: BoundUsage | None = None) -> float:
    """Lower bound on the test-basis gain via the lower sampling tail.

    Q_X >= Q_Z - gamma_hat(N_X, N_Z, Q_Z, eps1) with N_Z = N p_Z^2 and
    N_X = N (1-p_Z)^2; no positive root means the trivial bound 0.
    """
    n_z = n_pulses * p_z**2
    n_x = n_pulses * (1.0 - p_z) ** 2
    sol = sampling_gamma_lower(n_x, n_z, q_z, eps1)
    if usage is not None:
        usage.sampling += 1
    if sol is None:
        return 0.0
    return max(0.0, q_z - sol.value)


def error_gain_upper_p2(yields: decoy_mod.YieldBounds, mu: float, truncation_eps: float = 1e-15) -> float:
    """Worst-case test-basis error gain from the yield upper bounds.

    Q_X^E <= (sum_nm sqrt(P_2n P_2m Ybar_{2n,2m}))^2
             + (sum_nm sqrt(P_2n+1 P_2m+1 Ybar_{2n+1,2m+1}))^2

    with Poisson weights at intensity mu.  Rows are truncated once their
    largest possible term (the yield-1 worst case) drops below
    ``truncation_eps`` of the running sum.
    """
    if mu <= 0.0:
        raise ValueError(f"signal intensity must be positive, got {mu}")
    max_photons = 400
    sqrt_p = [math.sqrt(decoy_mod.poisson_weight(i, mu)) for i in range(max_photons + 1)]

    def parity_sum(offset: int) -> float:
        total = 0.0
        for n_ph in range(offset, max_photons + 1, 2):
            # sqrt(P_n) bounds every remaining term of the row and of all
            # later rows (weights decay in the photon number for mu <= 1).
            if total > 0.0 and sqrt_p[n_ph] <= truncation_eps * total:
                break
            for m_ph in range(offset, max_photons + 1, 2):
                total += sqrt_p[n_ph] * sqrt_p[m_ph] * math.sqrt(yields.get(n_ph, m_ph))
                if total > 0.0 and sqrt_p[m_ph] <= truncation_eps * total:
                    break
        return total

    even = parity_sum(0)
    odd = parity_sum(1)
    return even * even + odd * odd


def phase_error_p2(
    n: float,
    q_x_lower: float,
    n_pulses: float,
    p_z: float,
    e_x_upper: float,
    eps1: float,
    usage: BoundUsage | None = None,
) -> float:
    """Phase error bound Ebar_X + gamma(n, k_lower, Ebar_X, eps1).

    k_lower = N_X * Q_X_lower is the certified number of test-basis
    successes; below one event there are no statistics and the protocol
    aborts.
    """
    if not 0.0 <= e_x_upper <= 1.0:
        raise ValueError(f"error-rate bound must lie in [0, 1], got {e_x_upper}")
    k_lower = n_pulses * (1.0 - p_z) ** 2 * q_x_lower
    if k_lower < 1.0:
        raise AbortProtocol(f"no certified test-basis statistics (k_lower={k_lower:.3g})")
    if n < 1:
        raise AbortProtocol(f"empty key string (n={n:.3g})")
    sol = sampling_gamma_upper(n, k_lower, e_x_upper, eps1)
    if usage is not None:
        usage.sampling += 1
    if not sol.converged:
        raise AbortProtocol("phase-error deviation solver did not converge")
    return e_x_upper + sol.value


def _abort(reason: str, diagnostics: dict) -> KeyRateResult:
    diagnostics = dict(diagnostics)
    diagnostics["abort_reason"] = reason
    return KeyRateResult(
        ell=0.0, rate=0.0, phi_z=math.nan, leak_ec=math.nan, aborted=True, diagnostics=diagnostics
    )


def evaluate_p1(
    cfg: SystemConfig,
    params: ProtocolParams,
    budget: SecurityBudget,
    phi_tol: float = 0.5,
    asymptotic: bool = False,
) -> KeyRateResult:
    """Expected key rate of the cat-state protocol at one operating point.

    Pipeline: channel observables, n = N p_Z^2 Q_Z and k = N p_X^2 Q_X,
    phase error via the sampling tail, then the four-part key length.  With
    ``asymptotic=True`` all fluctuation and penalty terms are dropped
    (phi_Z = E_X, ell = n[1-h(E_X)] - leak) for consistency checks.
    """
    if budget.variant != "p1":
        raise ValueError("budget variant must be 'p1'")
    n_pulses = cfg.total_pulses
    eta = arm_efficiency(cfg)
    q_z, e_z, q_cor, q_err = z_basis_observables(params.mu, eta, cfg)
    q_x, e_x = x_basis_observables_p1(params.mu, eta, cfg)
    diagnostics = {
        "eta": eta, "q_z": q_z, "e_z": e_z, "q_x": q_x, "e_x": e_x,
        "q_z_correct": q_cor, "q_z_error": q_err,
    }
    if q_z <= 0.0 or math.isnan(e_z) or q_x <= 0.0:
        return _abort("vanishing gain", diagnostics)
    n = n_pulses * params.p_z**2 * q_z
    k = n_pulses * (1.0 - params.p_z) ** 2 * q_x
    diagnostics.update(n=n, k=k)
    leak = leak_ec(n, e_z, cfg.ec_efficiency)
    diagnostics["leak_ec"] = leak
    if asymptotic:
        phi = e_x
        if phi > 0.5:
            return _abort("asymptotic phase error above 1/2", diagnostics)
        ell = max(0.0, n * (1.0 - binary_entropy(phi)) - leak)
        return KeyRateResult(
            ell=ell, rate=ell / n_pulses, phi_z=phi, leak_ec=leak,
            aborted=ell <= 0.0, diagnostics=diagnostics,
        )
    usage = BoundUsage()
    try:
        phi = phase_error_p1(n, k, e_x, budget.eps1, usage)
    except AbortProtocol as exc:
        diagnostics["usage"] = usage.as_tuple()
        return _abort(str(exc), diagnostics)
    diagnostics["phi_z"] = phi
    diagnostics["usage"] = usage.as_tuple()
    if usage.as_tuple() != P1_USAGE:
        raise RuntimeError(
            f"secrecy budget mismatch: used {usage.as_tuple()}, composition requires {P1_USAGE}"
        )
    if phi > phi_tol or phi > 0.5:
        return _abort(f"phase error {phi:.4f} above tolerance", diagnostics)
    ell = key_length_p1(n, phi, leak, budget)
    return KeyRateResult(
        ell=ell, rate=ell / n_pulses, phi_z=phi, leak_ec=leak,
        aborted=ell <= 0.0, diagnostics=diagnostics,
    )


def evaluate_p2(
    cfg: SystemConfig,
    params: ProtocolParams,
    budget: SecurityBudget,
    phi_tol: float = 0.5,
) -> KeyRateResult:
    """Expected key rate of the decoy protocol at one operating point.

    Pipeline: channel observables including all nine pair gains, observed
    pair counts, expected-gain intervals (17 x eps3), yield upper bounds,
    observed yields (9 x eps2), test-gain lower bound (eps1), error-rate
    bound, phase error (eps1), 31-part key length.  The invocation tally is
    checked against the secrecy composition after every complete evaluation.
    """
    if budget.variant != "p2":
        raise ValueError("budget variant must be 'p2'")
    if params.decoy is None:
        raise ValueError("Protocol 2 requires decoy settings")
    settings = params.decoy
    n_pulses = cfg.total_pulses
    eta = arm_efficiency(cfg)
    q_z, e_z, q_cor, q_err = z_basis_observables(params.mu, eta, cfg)
    diagnostics = {"eta": eta, "q_z": q_z, "e_z": e_z}
    if q_z <= 0.0 or math.isnan(e_z):
        return _abort("vanishing key-basis gain", diagnostics)
    n_z = n_pulses * params.p_z**2
    n_x = n_pulses * (1.0 - params.p_z) ** 2
    n = n_z * q_z
    diagnostics.update(n=n, n_z=n_z, n_x=n_x)
    leak = leak_ec(n, e_z, cfg.ec_efficiency)
    diagnostics["leak_ec"] = leak
    usage = BoundUsage()
    q_ab = {
        (a, b): decoy_gain(a, b, eta, cfg.dark_rate)
        for a in settings.intensities
        for b in settings.intensities
    }
    counts = {
        pair: n_x * settings.probability(pair[0]) * settings.probability(pair[1]) * gain
        for pair, gain in q_ab.items()
    }
    diagnostics["counts"] = {f"{a:g},{b:g}": c for (a, b), c in counts.items()}
    try:
        intervals = decoy_mod.gain_intervals_from_counts(counts, n_x, settings, budget.eps3, usage)
        expected_yields = decoy_mod.yield_upper_bounds(intervals, settings)
        observed_yields = decoy_mod.observed_yield_bounds(
            expected_yields, n_x, settings, budget.eps2, usage
        )
        diagnostics["yield_upper"] = {f"{n_}{m_}": observed_yields.get(n_, m_) for n_, m_ in decoy_mod.YIELD_PAIRS}
        diagnostics["yields_clamped_negative"] = observed_yields.clamped_negative
        q_x_low = q_x_lower_p2(q_z, n_pulses, params.p_z, budget.eps1, usage)
        diagnostics["q_x_lower"] = q_x_low
        if q_x_low <= 0.0:
            raise AbortProtocol("test-basis gain lower bound is 0")
        q_xe_upper = error_gain_upper_p2(observed_yields, params.mu)
        diagnostics["q_xe_upper"] = q_xe_upper
        e_x_up = min(1.0, q_xe_upper / q_x_low)
        diagnostics["e_x_upper"] = e_x_up
        if e_x_up > 0.5:
            raise AbortProtocol(f"error-rate bound {e_x_up:.4f} above 1/2")
        phi = phase_error_p2(n, q_x_low, n_pulses, params.p_z, e_x_up, budget.eps1, usage)
    except AbortProtocol as exc:
        diagnostics["usage"] = usage.as_tuple()
        return _abort(str(exc), diagnostics)
    diagnostics["phi_z"] = phi
    diagnostics["usage"] = usage.as_tuple()
    if usage.as_tuple() != P2_USAGE:
        raise RuntimeError(
            f"secrecy budget mismatch: used {usage.as_tuple()}, composition requires {P2_USAGE}"
        )
    if phi > phi_tol or phi > 0.5:
        return _abort(f"phase error {phi:.4f} above tolerance", diagnostics)
    ell = key_length_p2(n, phi, leak, budget)
    return KeyRateResult(
        ell=ell,
        rate=ell / n_pulses,
        phi_z=phi,
        leak_ec=leak,
        aborted=ell <= 0.0,
        e_x_upper=e_x_up,
        q_x_lower=q_x_low,
        diagnostics=diagnostics,
    )
