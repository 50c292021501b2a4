"""One-dimensional searches over source intensity and fiber length."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Tuple, Union

import numpy as np
from scipy.optimize import bisect

from .channel import ExperimentPreset, LinkEfficiencies, link_efficiency
from .errors import DomainError, NoCutoffError, NoRootError
from .postprocessing import DEFAULT_EC_TABLE, EcEfficiencyTable, binary_entropy, rate_for_link

__all__ = [
    "OptimizationResult",
    "MuPolicy",
    "golden_section_max",
    "maximize",
    "maximize_rate_over_mu",
    "maximize_rate_on_link",
    "optimal_mu_no_decoy_approx",
    "optimal_mu_decoy_approx",
    "mu_for_policy",
    "cutoff_distance",
]

INV_PHI = (math.sqrt(5) - 1) / 2
GRID_POINTS = 64
MU_BRACKET = (1e-6, 1.0)

# a fixed mean photon number, "optimal" (re-optimized at every distance) or
# "eta" (mu equal to the overall efficiency, the no-decoy rule of thumb)
MuPolicy = Union[float, str]


@dataclass(frozen=True)
class OptimizationResult:
    argmax: float
    value: float
    iterations: int
    bracket: Tuple[float, float]
    converged: bool


def golden_section_max(f: Callable[[float], float], a: float, b: float, tol: float) -> Tuple[float, float, int, Tuple[float, float]]:
    """Shrink ``[a, b]`` around a maximum of ``f`` until it is ``tol`` wide.

    Returns ``(x, f(x), iterations, (lo, hi))`` where ``x`` is the best point
    evaluated inside the final bracket.
    """
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    it = 0
    while b - a > tol:
        it += 1
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    x, fx = (c, fc) if fc >= fd else (d, fd)
    return x, fx, it, (a, b)


def _grid(lo: float, hi: float, n: int) -> np.ndarray:
    if lo > 0 and hi / lo >= 100:
        return np.geomspace(lo, hi, n)
    return np.linspace(lo, hi, n)


def maximize(f: Callable[[float], float], bracket: Tuple[float, float], tol: float) -> OptimizationResult:
    """Maximize a possibly zero-clamped function on ``bracket``.

    A coarse grid (geometric when the bracket spans two decades or more)
    picks the best cell; golden-section search then refines inside the two
    cells adjacent to it.  A function that is zero everywhere on the grid
    yields ``converged=False``.
    """
    lo, hi = bracket
    if not lo < hi:
        raise DomainError(f"empty bracket {bracket}")
    if not tol > 0:
        raise DomainError(f"tolerance must be positive, got {tol}")
    xs = _grid(lo, hi, GRID_POINTS)
    vals = [f(float(x)) for x in xs]
    k = int(np.argmax(vals))
    if vals[k] <= 0:
        return OptimizationResult(argmax=lo, value=0.0, iterations=0, bracket=(lo, hi), converged=False)
    a = float(xs[max(k - 1, 0)])
    b = float(xs[min(k + 1, GRID_POINTS - 1)])
    x, fx, it, (a, b) = golden_section_max(f, a, b, tol)
    if vals[k] > fx:
        # golden-section stays inside [a, b]; the grid point can only win by rounding
        x, fx = float(xs[k]), vals[k]
    return OptimizationResult(argmax=x, value=fx, iterations=it, bracket=(a, b), converged=True)


def maximize_rate_on_link(
    protocol: str,
    preset: ExperimentPreset,
    link: LinkEfficiencies,
    bracket: Tuple[float, float] = MU_BRACKET,
    tol: float = 1e-4,
    table: EcEfficiencyTable = DEFAULT_EC_TABLE,
) -> OptimizationResult:
    lo, hi = bracket
    if not 0 < lo < hi <= 1:
        raise DomainError(f"mu bracket must satisfy 0 < lo < hi <= 1, got {bracket}")
    return maximize(lambda mu: rate_for_link(protocol, preset, link, mu, table).r, bracket, tol)


def maximize_rate_over_mu(
    protocol: str,
    preset: ExperimentPreset,
    distance: float,
    bracket: Tuple[float, float] = MU_BRACKET,
    tol: float = 1e-4,
    table: EcEfficiencyTable = DEFAULT_EC_TABLE,
) -> OptimizationResult:
    """Mean photon number in ``bracket`` that maximizes the key rate per pulse."""
    return maximize_rate_on_link(protocol, preset, link_efficiency(preset, distance), bracket, tol, table)


def optimal_mu_no_decoy_approx(eta: float) -> float:
    """Root of ``-mu e^{-mu} + eta e^{-eta mu} = 0`` on (0, 1]; close to ``eta`` when small."""
    if not 0 < eta < 1:
        raise DomainError(f"eta must lie in (0, 1), got {eta}")

    def g(mu: float) -> float:
        return -mu * math.exp(-mu) + eta * math.exp(-eta * mu)

    # g(0) = eta > 0 and g(1) < 0 because x e^{-x} increases on (0, 1)
    return bisect(g, 0.0, 1.0, xtol=1e-15 * eta, rtol=4 * np.finfo(float).eps, maxiter=400)


def optimal_mu_decoy_approx(e_detector: float) -> float:
    """Root of ``(1 - mu) e^{-mu} = H2(e) / (1 - H2(e))`` in (0, 1).

    This is the optimum of the decoy rate once dark counts are dropped and
    error correction is taken as ideal.
    """
    if not 0 <= e_detector < 0.5:
        raise DomainError(f"e_detector must lie in [0, 1/2), got {e_detector}")
    h = binary_entropy(e_detector)
    ratio = h / (1 - h)
    if ratio >= 1:
        raise NoRootError(f"e_detector = {e_detector} is too noisy for a positive decoy rate")
    if ratio == 0:
        return 1.0
    # (1 - mu) e^{-mu} falls strictly from 1 to 0 on [0, 1]
    return bisect(lambda mu: (1 - mu) * math.exp(-mu) - ratio, 0.0, 1.0, xtol=1e-14, maxiter=400)


def mu_for_policy(
    policy: MuPolicy,
    protocol: str,
    preset: ExperimentPreset,
    link: LinkEfficiencies,
    table: EcEfficiencyTable = DEFAULT_EC_TABLE,
    tol: float = 1e-4,
) -> Tuple[float, float]:
    """Resolve a mu policy on a link; returns ``(mu, rate)``."""
    if policy == "optimal":
        res = maximize_rate_on_link(protocol, preset, link, MU_BRACKET, tol, table)
        if not res.converged:
            return res.argmax, 0.0
        return res.argmax, res.value
    if policy == "eta":
        mu = link.eta
    else:
        mu = float(policy)
    return mu, rate_for_link(protocol, preset, link, mu, table).r


def cutoff_distance(
    protocol: str,
    preset: ExperimentPreset,
    mu_policy: MuPolicy,
    threshold: float = 0.0,
    table: EcEfficiencyTable = DEFAULT_EC_TABLE,
    step: float = 1.0,
    tol: float = 0.01,
    max_distance: float = 1000.0,
) -> OptimizationResult:
    """Largest fiber length at which the key rate per pulse stays above ``threshold``.

    Scans forward on a ``step`` km grid to the first point where the rate is
    no longer above the threshold, then bisects that cell down to ``tol``.
    Assumes the rate does not recover once it has dropped (monotone tail).
    """
    if threshold < 0:
        raise DomainError(f"threshold must be >= 0, got {threshold}")

    def rate(distance: float) -> float:
        return mu_for_policy(mu_policy, protocol, preset, link_efficiency(preset, distance), table)[1]

    r0 = rate(0.0)
    if not r0 > threshold:
        raise NoCutoffError(f"{protocol} rate at 0 km ({r0:.3g}) is not above threshold {threshold:g}")
    good, bad = 0.0, None
    n = 1
    while n * step <= max_distance:
        d = n * step
        if rate(d) > threshold:
            good = d
        else:
            bad = d
            break
        n += 1
    if bad is None:
        raise NoCutoffError(f"{protocol} rate stays above {threshold:g} up to {max_distance} km")
    it = 0
    while bad - good > tol:
        it += 1
        mid = 0.5 * (good + bad)
        if rate(mid) > threshold:
            good = mid
        else:
            bad = mid
    return OptimizationResult(argmax=good, value=rate(good), iterations=it, bracket=(good, bad), converged=True)
