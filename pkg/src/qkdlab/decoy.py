"""Decoy-state estimation of photon-number resolved transmittances.

A vacuum decoy pins down the dark counts, a weak decoy (or several) pins down
the single-photon yield.  All estimators here consume decoy data only; the
signal state's own statistics never enter.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .channel import ExperimentPreset, LinkEfficiencies, i_photon_transmittance, link_efficiency
from .errors import (
    ConfigurationError,
    DomainError,
    InconsistentObservationError,
    MisuseError,
    SingularSystemError,
    WeaknessViolationError,
)

log = logging.getLogger(__name__)

__all__ = [
    "DecoyObservation",
    "YieldEstimate",
    "VacuumCheck",
    "WEAK_MU_GUARD",
    "CONDITION_WARN",
    "expected_vacuum_stats",
    "vacuum_consistency_check",
    "weak_decoy_estimate",
    "observe_link",
    "simulate_decoy_observations",
    "multi_decoy_solve",
    "read_observations",
    "format_estimate",
]

WEAK_MU_GUARD = 0.1
CONDITION_WARN = 1e12


@dataclass(frozen=True)
class DecoyObservation:
    mu: float
    p_d_observed: float
    delta_observed: float

    def __post_init__(self) -> None:
        if not self.mu >= 0:
            raise DomainError(f"decoy mu must be >= 0, got {self.mu}")
        if not 0 <= self.p_d_observed <= 1:
            raise DomainError(f"observed detection probability must lie in [0, 1], got {self.p_d_observed}")
        if not 0 <= self.delta_observed <= 0.5:
            raise DomainError(f"observed QBER must lie in [0, 1/2], got {self.delta_observed}")


@dataclass(frozen=True)
class YieldEstimate:
    """Estimated transmittances ``eta_i`` (i = 1..m) and single-photon yield.

    ``p_s_tilde`` and ``delta_s_tilde`` refer to the weakest decoy used.
    ``clamped`` is set when an unphysical ``eta_i`` was pulled back into
    [0, 1]; ``condition_warning`` carries any numerical diagnostic.
    """

    eta_i: Tuple[float, ...]
    p_dark_est: float
    p_s_tilde: float
    delta_s_tilde: float
    mus: Tuple[float, ...] = ()
    clamped: bool = False
    condition_number: Optional[float] = None
    condition_warning: Optional[str] = None

    @property
    def eta_1(self) -> float:
        return self.eta_i[0]


@dataclass(frozen=True)
class VacuumCheck:
    passed: bool
    dark_residual: float
    error_residual: float


def expected_vacuum_stats(preset: ExperimentPreset) -> Tuple[float, float]:
    """Detection probability and QBER an honest setup shows for vacuum pulses."""
    return preset.p_dark, 0.5


def vacuum_consistency_check(
    observed: DecoyObservation, preset: ExperimentPreset, tolerance: float = 0.05
) -> VacuumCheck:
    """Compare a vacuum-decoy measurement against the detector's dark counts.

    Residuals are relative: ``|p_d - p_dark| / p_dark`` and
    ``|delta - 1/2| / (1/2)``.  Both must be within ``tolerance``.
    """
    if observed.mu != 0:
        raise MisuseError(f"vacuum check needs a mu = 0 observation, got mu = {observed.mu}")
    p_dark, delta0 = expected_vacuum_stats(preset)
    diff = abs(observed.p_d_observed - p_dark)
    if p_dark > 0:
        dark_res = diff / p_dark
    else:
        dark_res = 0.0 if diff == 0 else math.inf
    err_res = abs(observed.delta_observed - delta0) / delta0
    return VacuumCheck(dark_res <= tolerance and err_res <= tolerance, dark_res, err_res)


def _single_photon_terms(obs: DecoyObservation, p_dark: float, p_s: float) -> Tuple[float, float, Optional[str]]:
    # p~_S ~= p_D - p_dark e^{-mu} when multi-photon clicks are negligible;
    # written via p_s so that the multi-decoy path shares it.
    decay = math.exp(-obs.mu)
    p_s_tilde = p_s + p_dark * (1 - decay)
    if p_s <= 0:
        return p_s_tilde, 0.5, "no single-photon detections; single-photon error set to 1/2"
    delta = (obs.delta_observed * obs.p_d_observed - 0.5 * p_dark * decay) / p_s
    warning = None
    if not 0 <= delta <= 0.5:
        warning = f"single-photon error estimate {delta:.6g} outside [0, 1/2]; clamped"
        delta = min(max(delta, 0.0), 0.5)
    return p_s_tilde, delta, warning


def weak_decoy_estimate(
    observed: DecoyObservation, p_dark: float, max_mu: float = WEAK_MU_GUARD
) -> YieldEstimate:
    """Single weak decoy: neglect multi-photon clicks and read off ``eta_1``."""
    mu = observed.mu
    if not mu > 0:
        raise MisuseError("weak decoy needs mu > 0; use vacuum_consistency_check for mu = 0")
    if mu > max_mu:
        raise WeaknessViolationError(f"weak decoy mu = {mu} exceeds the guard {max_mu}")
    p_s_weak = observed.p_d_observed - p_dark
    if p_s_weak < 0:
        raise InconsistentObservationError(
            f"decoy detection probability {observed.p_d_observed} is below the dark-count level {p_dark}"
        )
    eta_1 = p_s_weak / (mu * math.exp(-mu))
    p_s_tilde, delta_s, warning = _single_photon_terms(observed, p_dark, p_s_weak)
    clamped = not 0 <= eta_1 <= 1
    if clamped:
        warning = _join(warning, f"eta_1 = {eta_1:.6g} clamped to [0, 1]")
    return YieldEstimate(
        eta_i=(min(max(eta_1, 0.0), 1.0),),
        p_dark_est=p_dark,
        p_s_tilde=p_s_tilde,
        delta_s_tilde=delta_s,
        mus=(mu,),
        clamped=clamped,
        condition_warning=warning,
    )


def _join(a: Optional[str], b: str) -> str:
    return b if a is None else f"{a}; {b}"


def observe_link(
    link: LinkEfficiencies, e_detector: float, mus: Sequence[float], n_terms: int = 100
) -> List[DecoyObservation]:
    """Honest-channel decoy statistics, summing the photon-number series directly."""
    if len(set(mus)) != len(mus):
        raise DomainError("decoy intensities must be distinct")
    out = []
    for mu in mus:
        if mu < 0:
            raise DomainError(f"decoy mu must be >= 0, got {mu}")
        signal = 0.0
        if mu > 0:
            term = math.exp(-mu)
            for i in range(1, n_terms + 1):
                term *= mu / i
                signal += i_photon_transmittance(link.eta, i) * term
        p_d = link.p_dark + signal
        delta = 0.5 if p_d == 0 else (link.p_dark / 2 + e_detector * signal) / p_d
        out.append(DecoyObservation(mu, p_d, delta))
    return out


def simulate_decoy_observations(
    preset: ExperimentPreset, distance: float, mus: Sequence[float], n_terms: int = 100
) -> List[DecoyObservation]:
    return observe_link(link_efficiency(preset, distance), preset.e_detector, mus, n_terms)


def multi_decoy_solve(observations: Sequence[DecoyObservation], p_dark: float) -> YieldEstimate:
    """Solve the truncated photon-number system for ``eta_1 .. eta_m``.

    With ``m`` weak decoys and terms above ``m`` photons dropped::

        p_D(mu_j) - p_dark = sum_{i=1..m} eta_i mu_j^i e^{-mu_j} / i!

    The matrix is Vandermonde-like and badly conditioned for close ``mu_j``;
    columns are rescaled before the pivoted solve and a large condition
    number is reported rather than treated as fatal.
    """
    m = len(observations)
    if m == 0:
        raise MisuseError("multi-decoy solve needs at least one weak decoy")
    mus = [o.mu for o in observations]
    if any(mu <= 0 for mu in mus):
        raise MisuseError("multi-decoy solve takes weak decoys only (mu > 0); vacuum goes in p_dark")
    if len(set(mus)) != m:
        raise SingularSystemError(f"duplicate decoy intensities {mus} make the system singular")

    a = np.empty((m, m))
    b = np.empty(m)
    for j, obs in enumerate(observations):
        term = math.exp(-obs.mu)
        for i in range(m):
            term *= obs.mu / (i + 1)
            a[j, i] = term
        b[j] = obs.p_d_observed - p_dark
    scale = np.abs(a).max(axis=0)
    scaled = a / scale
    cond = float(np.linalg.cond(scaled))
    warning = None
    if not np.isfinite(cond):
        raise SingularSystemError("decoy system is numerically singular")
    if cond > CONDITION_WARN:
        warning = f"ill-conditioned decoy system (condition number {cond:.3g})"
        log.warning(warning)
    try:
        eta = np.linalg.solve(scaled, b) / scale
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(str(exc)) from exc

    clamped = bool(np.any((eta < 0) | (eta > 1)))
    if clamped:
        warning = _join(warning, "eta_i outside [0, 1] clamped")
    eta_1 = float(eta[0])
    weakest = min(observations, key=lambda o: o.mu)
    p_s = eta_1 * weakest.mu * math.exp(-weakest.mu)
    p_s_tilde, delta_s, w = _single_photon_terms(weakest, p_dark, p_s)
    if w is not None:
        warning = _join(warning, w)
    return YieldEstimate(
        eta_i=tuple(float(min(max(e, 0.0), 1.0)) for e in eta),
        p_dark_est=p_dark,
        p_s_tilde=p_s_tilde,
        delta_s_tilde=delta_s,
        mus=tuple(mus),
        clamped=clamped,
        condition_number=cond,
        condition_warning=warning,
    )


def read_observations(path: Union[str, Path]) -> List[DecoyObservation]:
    """Parse ``mu p_d delta`` lines; blank lines and ``#`` comments are skipped."""
    obs = []
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace(",", " ").split()
        if len(parts) != 3:
            raise ConfigurationError(f"{path}:{lineno}: expected 'mu p_d delta', got {raw!r}")
        try:
            mu, p_d, delta = (float(p) for p in parts)
        except ValueError:
            raise ConfigurationError(f"{path}:{lineno}: unparsable number in {raw!r}") from None
        obs.append(DecoyObservation(mu, p_d, delta))
    if len({o.mu for o in obs}) != len(obs):
        raise ConfigurationError(f"{path}: decoy intensities must be distinct")
    return obs


def format_estimate(est: YieldEstimate) -> str:
    """Serialize an estimate as ``key=value`` lines."""
    lines = [f"m={len(est.eta_i)}"]
    lines += [f"eta_{i}={v!r}" for i, v in enumerate(est.eta_i, 1)]
    lines += [
        f"p_dark_est={est.p_dark_est!r}",
        f"p_s_tilde={est.p_s_tilde!r}",
        f"delta_s_tilde={est.delta_s_tilde!r}",
        "mus=" + " ".join(repr(m) for m in est.mus),
        f"clamped={str(est.clamped).lower()}",
    ]
    if est.condition_number is not None:
        lines.append(f"condition_number={est.condition_number!r}")
    if est.condition_warning:
        lines.append(f"warning={est.condition_warning}")
    return "\n".join(lines) + "\n"
