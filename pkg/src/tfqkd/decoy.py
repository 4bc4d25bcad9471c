"""Three-intensity decoy-state estimation of photon-number yield bounds.

From the observed counts of the nine intensity pairs the estimator produces
upper bounds on the observed yields for the photon-number pairs

    (0,0) (1,1) (0,2) (2,0) (0,4) (4,0) (1,3) (3,1) (2,2)

in three stages: observed counts -> expected-gain intervals (inverted
Chernoff variant, failure probability eps3 per interval), gain intervals ->
expected-yield upper bounds (the closed decoy formulas), expected yields ->
observed-yield upper bounds (Chernoff upper tail, eps2 per pair).  Yields
for total photon number >= 5 default to 1.

Exactly 17 expected-value inversions are spent: every pair needs its gain
upper bound, but the (nu, nu) lower bound never appears in the formulas, so
that one interval edge is the free trivial bound 0 and costs no failure
probability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .bounds import chernoff_delta_upper, expected_lower, expected_upper

__all__ = [
    "YIELD_PAIRS",
    "DecoySettings",
    "GainIntervals",
    "YieldBounds",
    "poisson_weight",
    "gain_intervals_from_counts",
    "yield_upper_bounds",
    "observed_yield_upper",
    "observed_yield_bounds",
]

YIELD_PAIRS = ((0, 0), (1, 1), (0, 2), (2, 0), (0, 4), (4, 0), (1, 3), (3, 1), (2, 2))


@dataclass(frozen=True)
class DecoySettings:
    """Three intensities 0 < omega < nu plus vacuum, with their probabilities."""

    nu: float
    omega: float
    p_nu: float
    p_omega: float
    p_vac: float

    def __post_init__(self) -> None:
        if not 0.0 < self.omega < self.nu:
            raise ValueError(f"need 0 < omega < nu, got omega={self.omega}, nu={self.nu}")
        probs = (self.p_nu, self.p_omega, self.p_vac)
        if any(p <= 0.0 for p in probs):
            raise ValueError(f"intensity probabilities must be positive, got {probs}")
        if abs(sum(probs) - 1.0) > 1e-9:
            raise ValueError(f"intensity probabilities must sum to 1, got {sum(probs)}")

    @property
    def intensities(self) -> tuple[float, float, float]:
        return (self.nu, self.omega, 0.0)

    def probability(self, intensity: float) -> float:
        if intensity == self.nu:
            return self.p_nu
        if intensity == self.omega:
            return self.p_omega
        if intensity == 0.0:
            return self.p_vac
        raise KeyError(f"unknown intensity {intensity}")


@dataclass(frozen=True)
class GainIntervals:
    """Expected-gain intervals per intensity pair, both edges in [0, 1].

    The (nu, nu) lower edge is the trivial 0 (it is never consumed), so it
    carries no failure probability.
    """

    lower: dict
    upper: dict

    def __post_init__(self) -> None:
        for pair, up in self.upper.items():
            lo = self.lower[pair]
            if not 0.0 <= lo <= up <= 1.0:
                raise ValueError(f"invalid interval [{lo}, {up}] for pair {pair}")


def poisson_weight(n: int, a: float) -> float:
    """Photon-number weight e^{-a} a^n / n! of a phase-randomized pulse."""
    if n < 0:
        raise ValueError(f"photon number must be nonnegative, got {n}")
    if a < 0.0:
        raise ValueError(f"intensity must be nonnegative, got {a}")
    if a == 0.0:
        return 1.0 if n == 0 else 0.0
    return math.exp(-a + n * math.log(a) - math.lgamma(n + 1.0))


def gain_intervals_from_counts(
    counts: dict, n_x: float, settings: DecoySettings, eps3: float, usage=None
) -> GainIntervals:
    """Expected-gain intervals from observed pair counts.

    Each edge divides the bounded expected count by the number of pulse
    pairs n_x * p_a * p_b and clamps into [0, 1].  Seventeen inversions are
    spent (nine uppers, eight lowers); ``usage.expected`` is incremented per
    inversion when a usage recorder is passed.
    """
    lower: dict = {}
    upper: dict = {}
    for a in settings.intensities:
        for b in settings.intensities:
            pairs = n_x * settings.probability(a) * settings.probability(b)
            if pairs <= 0.0:
                raise ValueError(f"no pulse pairs for intensities ({a}, {b})")
            k_ab = counts[(a, b)]
            if k_ab < 0.0:
                raise ValueError(f"negative count for pair ({a}, {b})")
            up = expected_upper(k_ab, eps3) / pairs
            if usage is not None:
                usage.expected += 1
            upper[(a, b)] = min(1.0, max(0.0, up))
            if a == settings.nu and b == settings.nu:
                lower[(a, b)] = 0.0
            else:
                lo = expected_lower(k_ab, eps3) / pairs
                if usage is not None:
                    usage.expected += 1
                lower[(a, b)] = min(1.0, max(0.0, lo))
    return GainIntervals(lower=lower, upper=upper)


@dataclass(frozen=True)
class YieldBounds:
    """Yield upper bounds for the nine estimated pairs; 1 beyond them.

    ``clamped_negative`` lists pairs whose decoy numerator went negative
    under wide gain intervals and was clamped to 0 (a diagnostic, not an
    error: clamping can only loosen downstream bounds).
    """

    values: dict
    clamped_negative: tuple = ()

    def __post_init__(self) -> None:
        for pair, y in self.values.items():
            if not 0.0 <= y <= 1.0:
                raise ValueError(f"yield bound for {pair} outside [0, 1]: {y}")

    def get(self, n: int, m: int) -> float:
        if n + m >= 5:
            return 1.0
        return self.values[(n, m)]


def yield_upper_bounds(g: GainIntervals, settings: DecoySettings) -> YieldBounds:
    """Expected-yield upper bounds from the decoy gain intervals.

    Direct transcription of the three-intensity formulas; positive-signed
    gains enter at their upper edge, subtracted gains at their lower edge.
    Every bound is clamped into [0, 1]; negative numerators clamp to 0 and
    are flagged.
    """
    nu, om = settings.nu, settings.omega
    v, o = (nu, nu), (om, om)
    up, lo = g.upper, g.lower
    e_nu, e_om = math.exp(nu), math.exp(om)
    raw: dict = {}
    raw[(0, 0)] = up[(0.0, 0.0)]
    raw[(1, 1)] = (
        math.exp(2.0 * om) * up[(om, om)]
        - e_om * (lo[(om, 0.0)] + lo[(0.0, om)])
        + up[(0.0, 0.0)]
    ) / om**2
    half_denom = nu * om * (nu - om) / 2.0
    raw[(0, 2)] = (
        om * e_nu * up[(0.0, nu)] - nu * e_om * lo[(0.0, om)] + (nu - om) * up[(0.0, 0.0)]
    ) / half_denom
    raw[(2, 0)] = (
        om * e_nu * up[(nu, 0.0)] - nu * e_om * lo[(om, 0.0)] + (nu - om) * up[(0.0, 0.0)]
    ) / half_denom
    quart_denom = nu * om * (nu**3 - om**3) / 24.0
    raw[(0, 4)] = (
        om * e_nu * up[(0.0, nu)] - nu * e_om * lo[(0.0, om)] + (nu - om) * up[(0.0, 0.0)]
    ) / quart_denom
    raw[(4, 0)] = (
        om * e_nu * up[(nu, 0.0)] - nu * e_om * lo[(om, 0.0)] + (nu - om) * up[(0.0, 0.0)]
    ) / quart_denom
    cubic_denom = nu * om**2 * (nu**2 - om**2) / 6.0
    raw[(1, 3)] = (
        (om * math.exp(nu + om) * up[(om, nu)] + (nu - om) * e_om * up[(om, 0.0)] + nu * e_om * up[(0.0, om)])
        - (om * e_nu * lo[(0.0, nu)] + nu * math.exp(2.0 * om) * lo[(om, om)] + (nu - om) * lo[(0.0, 0.0)])
    ) / cubic_denom
    raw[(3, 1)] = (
        (om * math.exp(nu + om) * up[(nu, om)] + nu * e_om * up[(om, 0.0)] + (nu - om) * e_om * up[(0.0, om)])
        - (om * e_nu * lo[(nu, 0.0)] + nu * math.exp(2.0 * om) * lo[(om, om)] + (nu - om) * lo[(0.0, 0.0)])
    ) / cubic_denom
    square_denom = nu**2 * om**2 * (nu - om) ** 2 / 4.0
    raw[(2, 2)] = (
        om**2 * math.exp(2.0 * nu) * up[v]
        + nu**2 * math.exp(2.0 * om) * up[o]
        + om * (nu - om) * e_nu * (up[(nu, 0.0)] + up[(0.0, nu)])
        + (nu - om) ** 2 * up[(0.0, 0.0)]
        - (
            nu * om * math.exp(nu + om) * (lo[(nu, om)] + lo[(om, nu)])
            + nu * (nu - om) * e_om * (lo[(om, 0.0)] + lo[(0.0, om)])
        )
    ) / square_denom
    values: dict = {}
    clamped = []
    for pair, y in raw.items():
        if y < 0.0:
            clamped.append(pair)
            values[pair] = 0.0
        else:
            values[pair] = min(1.0, y)
    return YieldBounds(values=values, clamped_negative=tuple(clamped))


def _pair_weight(n: int, m: int, settings: DecoySettings) -> float:
    """Probability that an X-basis pulse pair carries (n, m) photons."""
    return sum(
        settings.probability(a) * settings.probability(b) * poisson_weight(n, a) * poisson_weight(m, b)
        for a in settings.intensities
        for b in settings.intensities
    )


def observed_yield_upper(
    y_star: float,
    n_x: float,
    settings: DecoySettings,
    n: int,
    m: int,
    eps2: float,
    usage=None,
) -> float:
    """Observed-yield upper bound from an expected-yield upper bound.

    The expected count behind (n, m) is s* = y* n_x sum_ab p_a p_b P_n^a
    P_m^b; the Chernoff upper tail inflates it to the observed allowance
    (1 + delta) s*, which is renormalized back to a yield and clamped at 1.
    A zero expected count falls back to the ln(1/eps2) count allowance.
    """
    if not 0.0 <= y_star <= 1.0:
        raise ValueError(f"expected yield must lie in [0, 1], got {y_star}")
    weight = _pair_weight(n, m, settings)
    denominator = n_x * weight
    if denominator <= 0.0:
        raise ValueError(f"no pulse pairs carry photon numbers ({n}, {m})")
    s_star = y_star * denominator
    if usage is not None:
        usage.chernoff += 1  # the zero-count fallback spends its eps2 allowance too
    if s_star == 0.0:
        return min(1.0, math.log(1.0 / eps2) / denominator)
    delta = chernoff_delta_upper(s_star, eps2)
    s_bar = (1.0 + delta.value) * s_star
    return min(1.0, s_bar / denominator)


def observed_yield_bounds(
    expected: YieldBounds, n_x: float, settings: DecoySettings, eps2: float, usage=None
) -> YieldBounds:
    """Observed-yield upper bounds for all nine estimated pairs."""
    values = {
        (n, m): observed_yield_upper(expected.get(n, m), n_x, settings, n, m, eps2, usage)
        for n, m in YIELD_PAIRS
    }
    return YieldBounds(values=values, clamped_negative=expected.clamped_negative)
