"""Brute-force and Monte-Carlo references for the tail bounds.

Everything in this module checks the solvers in :mod:`tfqkd.bounds` against
first-principles probability computations: exact hypergeometric and binomial
tails accumulated in log space, a seeded Monte-Carlo estimator for sums of
heterogeneous Bernoulli variables, and the exhaustive validation sweeps that
both the test suite and the ``validate`` CLI command run.

The exact tails are the authority here; the solvers are never used to define
their own expected values.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, logsumexp, ndtri

from .bounds import (
    TailSolution,
    chernoff_delta_lower,
    chernoff_delta_upper,
    sampling_gamma_lower,
    sampling_gamma_upper,
)

__all__ = [
    "EXACT_SIZE_LIMIT",
    "HypergeomScenario",
    "hypergeom_log_pmf",
    "hypergeom_tail_exact",
    "binomial_tail_exact",
    "McTailEstimate",
    "wilson_interval",
    "mc_bernoulli_tail",
    "ValidationRecord",
    "validate_sampling_tail",
    "validate_sampling_grid",
    "validate_chernoff_grid",
    "write_validation_report",
]

EXACT_SIZE_LIMIT = 10_000

# Comparisons of exact tail masses against solved failure probabilities allow
# for the float noise of a root solved to machine precision.
_VALIDATION_SLACK = 1e-9


@dataclass(frozen=True)
class HypergeomScenario:
    """A bit string of n+k bits with a known total number of ones.

    The k-sample is drawn without replacement; the remaining n bits form the
    unobserved string.
    """

    n: int
    k: int
    total_ones: int

    def __post_init__(self) -> None:
        if self.n < 1 or self.k < 1:
            raise ValueError(f"need n >= 1 and k >= 1, got n={self.n}, k={self.k}")
        if not 0 <= self.total_ones <= self.n + self.k:
            raise ValueError(
                f"total_ones must lie in [0, {self.n + self.k}], got {self.total_ones}"
            )


def hypergeom_log_pmf(scenario: HypergeomScenario) -> tuple[np.ndarray, np.ndarray]:
    """Support and log pmf of the number of ones observed in the k-sample."""
    n, k, t = scenario.n, scenario.k, scenario.total_ones
    j = np.arange(max(0, t - n), min(k, t) + 1)
    log_pmf = (
        gammaln(k + 1.0)
        - gammaln(j + 1.0)
        - gammaln(k - j + 1.0)
        + gammaln(n + 1.0)
        - gammaln(t - j + 1.0)
        - gammaln(n - t + j + 1.0)
        - (gammaln(n + k + 1.0) - gammaln(t + 1.0) - gammaln(n + k - t + 1.0))
    )
    return j, log_pmf


def hypergeom_tail_exact(
    scenario: HypergeomScenario, threshold: float, direction: str = "upper"
) -> float:
    """Exact probability of the sampling tail event at a fixed offset.

    Sums the hypergeometric pmf over sample one-counts j for which the
    remaining rate lambda_n = (T-j)/n deviates from the sampled rate
    lambda_k = j/k by at least ``threshold`` (upper: lambda_n >= lambda_k +
    threshold; lower: lambda_n <= lambda_k - threshold).  Deviations are
    compared inclusively, matching the tail statements being validated.
    """
    if scenario.n + scenario.k > EXACT_SIZE_LIMIT:
        raise ValueError(
            f"exact mode supports n+k <= {EXACT_SIZE_LIMIT}, got {scenario.n + scenario.k}"
        )
    if direction not in ("upper", "lower"):
        raise ValueError(f"direction must be 'upper' or 'lower', got {direction!r}")
    j, log_pmf = hypergeom_log_pmf(scenario)
    lam_n = (scenario.total_ones - j) / scenario.n
    lam_k = j / scenario.k
    if direction == "upper":
        mask = lam_n >= lam_k + threshold
    else:
        mask = lam_n <= lam_k - threshold
    if not np.any(mask):
        return 0.0
    return float(np.exp(logsumexp(log_pmf[mask])))


def binomial_tail_exact(m: int, p: float, threshold: float, direction: str = "upper") -> float:
    """Exact Binomial(m, p) tail mass at a real-valued threshold.

    Upper: Pr[X >= threshold]; lower: Pr[X <= threshold].  Computed from the
    log pmf with a log-sum-exp reduction, so it stays finite up to m ~ 1e6.
    """
    if m < 0:
        raise ValueError(f"trial count must be nonnegative, got {m}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"success probability must lie in [0, 1], got {p}")
    if direction not in ("upper", "lower"):
        raise ValueError(f"direction must be 'upper' or 'lower', got {direction!r}")
    if m == 0:
        if direction == "upper":
            return 1.0 if threshold <= 0.0 else 0.0
        return 1.0 if threshold >= 0.0 else 0.0
    if direction == "upper":
        lo, hi = math.ceil(threshold), m
    else:
        lo, hi = 0, math.floor(threshold)
    lo = max(lo, 0)
    hi = min(hi, m)
    if lo > hi:
        return 0.0
    j = np.arange(lo, hi + 1)
    if p == 0.0:
        return 1.0 if lo == 0 else 0.0
    if p == 1.0:
        return 1.0 if hi == m else 0.0
    log_pmf = (
        gammaln(m + 1.0)
        - gammaln(j + 1.0)
        - gammaln(m - j + 1.0)
        + j * math.log(p)
        + (m - j) * math.log1p(-p)
    )
    return float(min(1.0, np.exp(logsumexp(log_pmf))))


@dataclass(frozen=True)
class McTailEstimate:
    """Monte-Carlo tail estimate with its Wilson confidence interval."""

    estimate: float
    ci_lower: float
    ci_upper: float
    samples: int
    seed: int


def wilson_interval(successes: int, trials: int, confidence: float = 0.99) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        return 0.0, 1.0
    z = float(ndtri(1.0 - (1.0 - confidence) / 2.0))
    z2 = z * z
    p_hat = successes / trials
    denom = 1.0 + z2 / trials
    center = (p_hat + z2 / (2.0 * trials)) / denom
    spread = z * math.sqrt(p_hat * (1.0 - p_hat) / trials + z2 / (4.0 * trials * trials)) / denom
    return max(0.0, center - spread), min(1.0, center + spread)


def mc_bernoulli_tail(
    probs,
    threshold: float,
    direction: str = "upper",
    samples: int = 100_000,
    seed: int = 0,
) -> McTailEstimate:
    """Monte-Carlo tail probability for a heterogeneous Bernoulli sum.

    Deterministic for a fixed 64-bit seed; shards may derive per-shard seeds
    from the same generator and reduce in index order without changing the
    result, but this implementation draws sequentially.
    """
    if samples < 10_000:
        raise ValueError(f"need at least 1e4 samples for a usable interval, got {samples}")
    if direction not in ("upper", "lower"):
        raise ValueError(f"direction must be 'upper' or 'lower', got {direction!r}")
    p = np.asarray(probs, dtype=float)
    rng = np.random.default_rng(seed)
    hits = 0
    remaining = samples
    batch = max(1, min(remaining, 2_000_000 // max(1, p.size)))
    while remaining > 0:
        b = min(batch, remaining)
        x = (rng.random((b, p.size)) < p).sum(axis=1)
        if direction == "upper":
            hits += int(np.count_nonzero(x >= threshold))
        else:
            hits += int(np.count_nonzero(x <= threshold))
        remaining -= b
    lo, hi = wilson_interval(hits, samples, 0.99)
    return McTailEstimate(hits / samples, lo, hi, samples, seed)


@dataclass(frozen=True)
class ValidationRecord:
    """One bound-vs-exact-probability comparison for the report CSV."""

    scenario: str
    bound_value: float
    tail_mass: float
    eps: float
    passed: bool
    note: str = ""


def validate_sampling_tail(
    n: int, k: int, eps: float, tail: str = "upper", gamma_scale: float = 1.0
) -> ValidationRecord:
    """Exhaustively validate one sampling-bound configuration.

    The sampling bound guarantees, for each possible observed rate
    lambda_k = j/k separately, that the joint event "j ones are observed and
    the remaining rate deviates by at least gamma(j/k)" has probability at
    most eps under every total one-count consistent with that observation
    (the total is adversarial, the sampling is the only randomness).  A
    union over different observed values is not claimed and genuinely
    exceeds eps for small strings.  The record carries the worst (j, T)
    pair.  ``gamma_scale`` shrinks the solved deviations and exists as a
    negative-control hook.
    """
    if tail not in ("upper", "lower"):
        raise ValueError(f"tail must be 'upper' or 'lower', got {tail!r}")
    worst = 0.0
    worst_at = (0, 0)
    for j in range(0, k + 1):
        lam = j / k
        if tail == "upper":
            sol = sampling_gamma_upper(n, k, lam, eps)
        else:
            sol = sampling_gamma_lower(n, k, lam, eps)
            if sol is None:
                continue  # no positive root: only the trivial rate 0 is claimed
        gam = sol.value * gamma_scale
        t = np.arange(j, j + n + 1)  # totals consistent with observing j ones
        lam_n = (t - j) / n
        if tail == "upper":
            mask = lam_n >= lam + gam
        else:
            mask = lam_n <= lam - gam
        if not np.any(mask):
            continue
        tv = t[mask]
        log_pmf = (
            gammaln(k + 1.0)
            - gammaln(j + 1.0)
            - gammaln(k - j + 1.0)
            + gammaln(n + 1.0)
            - gammaln(tv - j + 1.0)
            - gammaln(n - tv + j + 1.0)
            - (gammaln(n + k + 1.0) - gammaln(tv + 1.0) - gammaln(n + k - tv + 1.0))
        )
        mass = float(np.exp(log_pmf.max()))
        if mass > worst:
            worst = mass
            worst_at = (j, int(tv[int(np.argmax(log_pmf))]))
    passed = worst <= eps * (1.0 + _VALIDATION_SLACK) + 1e-15
    return ValidationRecord(
        scenario=f"sampling_{tail} n={n} k={k} worst_j={worst_at[0]} worst_T={worst_at[1]}",
        bound_value=eps,
        tail_mass=worst,
        eps=eps,
        passed=passed,
    )


def validate_sampling_grid(
    max_total: int = 30,
    eps_values=(1e-1, 1e-2, 1e-3),
    gamma_scale: float = 1.0,
) -> list[ValidationRecord]:
    """Run the exhaustive sampling validation over all n+k <= max_total."""
    records = []
    for total in range(2, max_total + 1):
        for k in range(1, total):
            n = total - k
            for eps in eps_values:
                for tail in ("upper", "lower"):
                    records.append(validate_sampling_tail(n, k, eps, tail, gamma_scale))
    return records


def validate_chernoff_grid(
    mu_values=(1.0, 10.0, 100.0, 1000.0),
    eps_values=(1e-2, 1e-6, 1e-10),
    trials_per_mu: int = 10,
    delta_scale: float = 1.0,
) -> list[ValidationRecord]:
    """Validate both Chernoff tails against exact iid binomial masses.

    Each mean mu is realized as Binomial(trials_per_mu * mu, 1/trials_per_mu)
    so the largest case stays within exact summation reach.  A clamped lower
    solution (delta_hat = 1) certifies only the trivial lower bound 0 and is
    recorded as vacuous.
    """
    records = []
    for mu in mu_values:
        m = int(round(trials_per_mu * mu))
        p = mu / m
        for eps in eps_values:
            up = chernoff_delta_upper(mu, eps)
            thr = (1.0 + up.value * delta_scale) * mu
            mass = binomial_tail_exact(m, p, thr, "upper")
            records.append(
                ValidationRecord(
                    scenario=f"chernoff_upper mu={mu} m={m} eps={eps}",
                    bound_value=up.value * delta_scale,
                    tail_mass=mass,
                    eps=eps,
                    passed=mass <= eps * (1.0 + _VALIDATION_SLACK),
                )
            )
            lo = chernoff_delta_lower(mu, eps)
            if lo.clamped and lo.value >= 1.0:
                records.append(
                    ValidationRecord(
                        scenario=f"chernoff_lower mu={mu} m={m} eps={eps}",
                        bound_value=1.0,
                        tail_mass=float("nan"),
                        eps=eps,
                        passed=True,
                        note="vacuous: certified lower bound is 0",
                    )
                )
                continue
            thr = (1.0 - lo.value * delta_scale) * mu
            mass = binomial_tail_exact(m, p, thr, "lower")
            records.append(
                ValidationRecord(
                    scenario=f"chernoff_lower mu={mu} m={m} eps={eps}",
                    bound_value=lo.value * delta_scale,
                    tail_mass=mass,
                    eps=eps,
                    passed=mass <= eps * (1.0 + _VALIDATION_SLACK),
                )
            )
    return records


def write_validation_report(records, path) -> None:
    """Write validation records as CSV (one row per scenario)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["scenario", "bound_value", "exact_or_mc_tail_mass", "eps", "pass", "note"])
        for r in records:
            writer.writerow(
                [r.scenario, repr(r.bound_value), repr(r.tail_mass), repr(r.eps), r.passed, r.note]
            )
