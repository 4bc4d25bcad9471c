"""Derivative-free maximization of the key rate over the free parameters.

Each operating point is optimized by a restarted Nelder-Mead simplex search
(reflection 1, expansion 2, contraction 0.5) running in normalized [0, 1]
coordinates and terminating when the simplex diameter falls below 1e-6.
Intensities use a log scale inside the box, the decoy probability triple is
reparameterized softmax-style from two bounded logits so the simplex
constraint stays box-like, and the decoy intensity ordering omega < nu is
enforced by optimizing omega as a fraction of nu.

Aborting evaluations score zero, which makes the abort cliffs flat rather
than infinite; random restarts handle the resulting plateaus.  Everything is
deterministic for a fixed seed, including the multi-process path, because
restarts are reduced in index order.
"""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .channel import SystemConfig, plob_bound
from .decoy import DecoySettings
from .keyrate import KeyRateResult, ProtocolParams, SecurityBudget, evaluate_p1, evaluate_p2

__all__ = ["ParameterSpace", "SweepPoint", "optimize", "sweep"]

DEFAULT_RESTARTS = 16


@dataclass(frozen=True)
class ParameterSpace:
    """Box bounds of the free parameters and their normalized encoding."""

    mu_min: float = 1e-4
    mu_max: float = 1.0
    p_z_min: float = 0.01
    p_z_max: float = 0.99
    nu_min: float = 1e-4
    nu_max: float = 1.0
    omega_min: float = 1e-5
    omega_frac_min: float = 0.01
    omega_frac_max: float = 0.99
    logit_max: float = 8.0

    def dims(self, variant: str) -> int:
        return 2 if variant == "p1" else 6

    def _log_decode(self, t: float, lo: float, hi: float) -> float:
        return 10.0 ** (math.log10(lo) + t * (math.log10(hi) - math.log10(lo)))

    def _log_encode(self, v: float, lo: float, hi: float) -> float:
        return (math.log10(v) - math.log10(lo)) / (math.log10(hi) - math.log10(lo))

    def decode(self, x, variant: str) -> ProtocolParams:
        """Map a normalized coordinate vector to protocol parameters."""
        x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
        mu = self._log_decode(x[0], self.mu_min, self.mu_max)
        p_z = self.p_z_min + x[1] * (self.p_z_max - self.p_z_min)
        if variant == "p1":
            return ProtocolParams(mu=mu, p_z=p_z)
        nu = self._log_decode(x[2], self.nu_min, self.nu_max)
        frac = self.omega_frac_min + x[3] * (self.omega_frac_max - self.omega_frac_min)
        omega = min(max(nu * frac, self.omega_min), nu * (1.0 - 1e-9))
        z1 = (x[4] - 0.5) * 2.0 * self.logit_max
        z2 = (x[5] - 0.5) * 2.0 * self.logit_max
        e1, e2 = math.exp(z1), math.exp(z2)
        s = 1.0 + e1 + e2
        decoy = DecoySettings(nu=nu, omega=omega, p_nu=e1 / s, p_omega=e2 / s, p_vac=1.0 / s)
        return ProtocolParams(mu=mu, p_z=p_z, decoy=decoy)

    def encode(self, params: ProtocolParams, variant: str) -> np.ndarray:
        """Inverse of decode, clipped into the normalized box."""
        x = [
            self._log_encode(params.mu, self.mu_min, self.mu_max),
            (params.p_z - self.p_z_min) / (self.p_z_max - self.p_z_min),
        ]
        if variant == "p2":
            decoy = params.decoy
            if decoy is None:
                raise ValueError("Protocol 2 parameters need decoy settings")
            x.append(self._log_encode(decoy.nu, self.nu_min, self.nu_max))
            frac = decoy.omega / decoy.nu
            x.append((frac - self.omega_frac_min) / (self.omega_frac_max - self.omega_frac_min))
            z1 = math.log(decoy.p_nu / decoy.p_vac)
            z2 = math.log(decoy.p_omega / decoy.p_vac)
            x.append(z1 / (2.0 * self.logit_max) + 0.5)
            x.append(z2 / (2.0 * self.logit_max) + 0.5)
        return np.clip(np.asarray(x, dtype=float), 0.0, 1.0)


def _evaluate(cfg: SystemConfig, variant: str, params: ProtocolParams, budget: SecurityBudget, phi_tol: float) -> KeyRateResult:
    if variant == "p1":
        return evaluate_p1(cfg, params, budget, phi_tol)
    return evaluate_p2(cfg, params, budget, phi_tol)


def _negative_rate(x, cfg, variant, budget, space, phi_tol) -> float:
    params = space.decode(x, variant)
    return -_evaluate(cfg, variant, params, budget, phi_tol).rate


def _restart_task(args):
    x0, cfg, variant, budget, space, phi_tol, maxfev = args
    res = minimize(
        _negative_rate,
        x0,
        args=(cfg, variant, budget, space, phi_tol),
        method="Nelder-Mead",
        options={"xatol": 1e-6, "fatol": 1e30, "maxfev": maxfev, "maxiter": maxfev},
    )
    return float(res.fun), np.asarray(res.x, dtype=float)


def optimize(
    cfg: SystemConfig,
    variant: str,
    budget: SecurityBudget,
    space: ParameterSpace | None = None,
    seed: int = 0,
    restarts: int = DEFAULT_RESTARTS,
    threads: int = 1,
    warm_starts: tuple[ProtocolParams, ...] = (),
    phi_tol: float = 0.5,
    maxfev: int = 1200,
    screen: int = 256,
) -> tuple[ProtocolParams, KeyRateResult]:
    """Best parameters found by restarted simplex search at one point.

    The feasible region shrinks to a small island deep in the loss budget
    while aborting evaluations all score exactly 0, so the restart points
    are chosen by screening ``screen`` seeded interior samples and starting
    the simplex from the best scorers (padded with further random interiors
    when fewer than ``restarts`` screened points are distinct).  The final
    answer dominates every screened sample because the simplex never loses
    its best vertex.

    ``warm_starts`` adds extra start candidates (e.g. a neighbouring sweep
    point's optimum) ahead of the screened ones, so a warm run with the
    same seed can only improve on the cold run.  When everything lands on
    the abort plateau the zero-rate result is returned with an
    ``optimizer_all_aborted`` diagnostic rather than an error.
    """
    if variant not in ("p1", "p2"):
        raise ValueError(f"variant must be 'p1' or 'p2', got {variant!r}")
    space = space or ParameterSpace()
    d = space.dims(variant)
    rng = np.random.default_rng(seed)
    n_screen = max(screen, restarts)
    candidates = rng.uniform(0.02, 0.98, size=(n_screen, d))
    scores = np.array(
        [_negative_rate(x, cfg, variant, budget, space, phi_tol) for x in candidates]
    )
    order = np.argsort(scores, kind="stable")[:restarts]
    starts = [space.encode(w, variant) for w in warm_starts]
    starts.extend(candidates[i] for i in order)
    tasks = [(x0, cfg, variant, budget, space, phi_tol, maxfev) for x0 in starts]
    if threads > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(_restart_task, tasks))
    else:
        outcomes = [_restart_task(t) for t in tasks]
    best_idx = min(range(len(outcomes)), key=lambda i: (outcomes[i][0], i))
    best_x = outcomes[best_idx][1]
    params = space.decode(best_x, variant)
    result = _evaluate(cfg, variant, params, budget, phi_tol)
    if result.rate <= 0.0:
        result.diagnostics["optimizer_all_aborted"] = True
    return params, result


@dataclass(frozen=True)
class SweepPoint:
    axis_value: float
    params: ProtocolParams
    result: KeyRateResult
    plob: float


def sweep(
    cfg: SystemConfig,
    axis: str,
    grid,
    variant: str,
    budget: SecurityBudget,
    space: ParameterSpace | None = None,
    seed: int = 0,
    restarts: int = DEFAULT_RESTARTS,
    threads: int = 1,
    warm_start: bool = True,
    phi_tol: float = 0.5,
    maxfev: int = 1200,
) -> list[SweepPoint]:
    """Optimize along a distance or pulse-count grid with warm starting.

    Results are ordered by the grid.  Per-point seeds are spawned from the
    master seed, so cold and warm runs share their random starts and the
    warm run dominates pointwise.
    """
    grid = list(grid)
    if not grid:
        raise ValueError("sweep grid must be non-empty")
    if axis not in ("distance", "pulses"):
        raise ValueError(f"axis must be 'distance' or 'pulses', got {axis!r}")
    space = space or ParameterSpace()
    children = np.random.SeedSequence(seed).spawn(len(grid))
    points: list[SweepPoint] = []
    history: list[ProtocolParams] = []  # optima of the last non-aborted points
    for i, value in enumerate(grid):
        if axis == "distance":
            cfg_i = dataclasses.replace(cfg, distance_km=float(value))
        else:
            cfg_i = dataclasses.replace(cfg, total_pulses=float(value))
        warm: list[ProtocolParams] = []
        if warm_start and history:
            warm.append(history[-1])
            if len(history) >= 2:
                # Continuation step: extrapolate the drift of the optimum in
                # encoded coordinates (warm candidates only add starts).
                x_prev = space.encode(history[-1], variant)
                x_back = space.encode(history[-2], variant)
                warm.append(space.decode(2.0 * x_prev - x_back, variant))
        point_seed = int(children[i].generate_state(1, dtype=np.uint64)[0])
        params, result = optimize(
            cfg_i,
            variant,
            budget,
            space=space,
            seed=point_seed,
            restarts=restarts,
            threads=threads,
            warm_starts=tuple(warm),
            phi_tol=phi_tol,
            maxfev=maxfev,
        )
        points.append(SweepPoint(axis_value=float(value), params=params, result=result, plob=plob_bound(cfg_i)))
        if not result.aborted:
            history.append(params)
    return points
