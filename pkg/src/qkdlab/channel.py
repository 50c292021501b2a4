"""Source, fiber and detector model of a weak-coherent-pulse BB84 link.

Everything here is a closed-form function of the fiber length and the mean
photon number ``mu`` of the Poissonian source.  Dark counts are composed
additively with signal detections (``p_d = p_signal + p_dark``); the exact
independent-click composition would be::

    p_d = p_signal + p_dark - p_signal * p_dark

which differs by less than ``p_dark`` in relative terms and is not used by any
downstream formula.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

from .errors import ConfigurationError, DomainError

__all__ = [
    "ExperimentPreset",
    "LinkEfficiencies",
    "DetectionStats",
    "ConditionalYields",
    "PRESETS",
    "get_preset",
    "link_efficiency",
    "link_from_eta",
    "i_photon_transmittance",
    "detection_stats",
    "dark_adjusted",
    "key_bit_rate",
    "multi_photon_emission",
]

_TINY = 1e-300


def _flush(x: float) -> float:
    return 0.0 if abs(x) < _TINY else x


def multi_photon_emission(x: float) -> float:
    """Return ``1 - (1 + x) exp(-x)``, accurate for small ``x``.

    This is the probability that a Poisson source of mean ``x`` emits two or
    more photons.
    """
    if x < 0:
        raise DomainError(f"mean photon number must be >= 0, got {x}")
    if x < 1e-2:
        # alternating series sum_{k>=2} (-1)^k (k-1) x^k / k!
        total, power = 0.0, x
        for k in range(2, 40):
            power *= x / k
            contrib = (k - 1) * power
            total += contrib if k % 2 == 0 else -contrib
            if contrib <= 1e-18 * total:
                break
        return total
    return -math.expm1(-x) - x * math.exp(-x)


@dataclass(frozen=True)
class ExperimentPreset:
    """Detector and fiber parameters of one experimental setup.

    ``eta_bob`` overrides the ``10**(-t_bob_db/10) * eta_d`` composition when
    the experiment quotes Bob's efficiency directly.
    """

    name: str
    alpha: float
    t_bob_db: float
    e_detector: float
    d_b: float
    eta_d: float
    wavelength: Optional[float] = None
    q: float = 0.5
    nu_a: float = 1e6
    nu_b: float = 1e6
    eta_bob: Optional[float] = None
    detectors: int = 2

    def __post_init__(self) -> None:
        problems = []
        if not self.alpha >= 0:
            problems.append(f"alpha must be >= 0, got {self.alpha}")
        if not self.t_bob_db >= 0:
            problems.append(f"t_bob_db must be >= 0, got {self.t_bob_db}")
        if not 0 <= self.e_detector <= 0.5:
            problems.append(f"e_detector must lie in [0, 1/2], got {self.e_detector}")
        if not 0 <= self.d_b < 1:
            problems.append(f"d_b must lie in [0, 1), got {self.d_b}")
        if not 0 < self.eta_d <= 1:
            problems.append(f"eta_d must lie in (0, 1], got {self.eta_d}")
        if not 0 < self.q <= 1:
            problems.append(f"q must lie in (0, 1], got {self.q}")
        if not (self.nu_a > 0 and self.nu_b > 0):
            problems.append("nu_a and nu_b must be positive")
        if self.eta_bob is not None and not 0 < self.eta_bob <= 1:
            problems.append(f"eta_bob must lie in (0, 1], got {self.eta_bob}")
        if self.detectors < 1 or self.detectors * self.d_b >= 1:
            problems.append(f"detectors must be >= 1 with detectors*d_b < 1, got {self.detectors}")
        if problems:
            raise ConfigurationError("; ".join(problems))

    @property
    def bob_efficiency(self) -> float:
        if self.eta_bob is not None:
            return self.eta_bob
        return 10 ** (-self.t_bob_db / 10) * self.eta_d

    @property
    def p_dark(self) -> float:
        return self.detectors * self.d_b

    def with_overrides(self, **changes) -> "ExperimentPreset":
        return replace(self, **changes)


PRESETS = {
    "T8": ExperimentPreset("T8", alpha=2.5, t_bob_db=8.0, e_detector=0.01, d_b=5e-8, eta_d=0.5, wavelength=830),
    "G13": ExperimentPreset("G13", alpha=0.32, t_bob_db=3.2, e_detector=0.0014, d_b=8.2e-5, eta_d=0.17, wavelength=1300),
    "KTH": ExperimentPreset("KTH", alpha=0.2, t_bob_db=1.0, e_detector=0.01, d_b=2e-4, eta_d=0.18, wavelength=1550),
    "GYS": ExperimentPreset(
        "GYS", alpha=0.21, t_bob_db=5.0, e_detector=0.033, d_b=8.5e-7, eta_d=0.12, wavelength=1550, eta_bob=0.045
    ),
}


def get_preset(name: str) -> ExperimentPreset:
    try:
        return PRESETS[name.upper()]
    except KeyError:
        raise ConfigurationError(f"unknown preset {name!r}; choose one of {', '.join(PRESETS)}") from None


@dataclass(frozen=True)
class LinkEfficiencies:
    t_ab: float
    eta_bob: float
    eta: float
    p_dark: float


def link_efficiency(preset: ExperimentPreset, distance: float) -> LinkEfficiencies:
    """Channel transmittance and overall efficiency at ``distance`` km."""
    if not distance >= 0:
        raise DomainError(f"distance must be >= 0 km, got {distance}")
    t_ab = 10 ** (-preset.alpha * distance / 10)
    eta_bob = preset.bob_efficiency
    return LinkEfficiencies(t_ab=t_ab, eta_bob=eta_bob, eta=t_ab * eta_bob, p_dark=preset.p_dark)


def link_from_eta(preset: ExperimentPreset, eta: float) -> LinkEfficiencies:
    """Build a link with a prescribed overall efficiency ``eta``.

    The preset's dark counts are kept.  If ``eta`` exceeds Bob's own
    efficiency the fiber is taken as lossless and Bob's efficiency is raised
    to ``eta``.
    """
    if not 0 < eta <= 1:
        raise DomainError(f"eta must lie in (0, 1], got {eta}")
    eta_bob = preset.bob_efficiency
    if eta > eta_bob:
        return LinkEfficiencies(t_ab=1.0, eta_bob=eta, eta=eta, p_dark=preset.p_dark)
    return LinkEfficiencies(t_ab=eta / eta_bob, eta_bob=eta_bob, eta=eta, p_dark=preset.p_dark)


def i_photon_transmittance(eta: float, i: int) -> float:
    """Probability that at least one of ``i`` independently lost photons arrives."""
    if not 0 <= eta <= 1:
        raise DomainError(f"eta must lie in [0, 1], got {eta}")
    if i < 0:
        raise DomainError(f"photon number must be >= 0, got {i}")
    if i == 0:
        return 0.0
    if eta == 1:
        return 1.0
    return -math.expm1(i * math.log1p(-eta))


@dataclass(frozen=True)
class DetectionStats:
    """Per-pulse detection probabilities and error rates of the signal state."""

    mu: float
    p_dark: float
    p_signal: float
    p_s: float
    p_m: float
    s_m: float
    p_d: float
    delta: float
    delta_s: float
    delta_m: float
    f1_decoy: float
    f1_pessimistic: float


def detection_stats(link: LinkEfficiencies, mu: float, e_detector: float) -> DetectionStats:
    if not mu > 0:
        raise DomainError(f"mu must be > 0, got {mu}")
    if not 0 <= e_detector <= 0.5:
        raise DomainError(f"e_detector must lie in [0, 1/2], got {e_detector}")
    eta = link.eta
    x = eta * mu
    p_signal = _flush(-math.expm1(-x))
    p_s = _flush(x * math.exp(-mu))
    # 1 - e^{-x} - x e^{-mu} split into two non-cancelling pieces
    p_m = multi_photon_emission(x) - x * math.exp(-x) * math.expm1(-(1 - eta) * mu)
    p_m = _flush(max(p_m, 0.0))
    s_m = _flush(multi_photon_emission(mu))
    p_d = link.p_dark + p_signal
    if p_d > 0:
        delta = (link.p_dark / 2 + e_detector * p_signal) / p_d
        f1_decoy = p_s / p_d
        f1_pess = max(0.0, p_d - link.p_dark - s_m) / p_d
    else:
        delta, f1_decoy, f1_pess = 0.5, 0.0, 0.0
    return DetectionStats(
        mu=mu,
        p_dark=link.p_dark,
        p_signal=p_signal,
        p_s=p_s,
        p_m=p_m,
        s_m=s_m,
        p_d=p_d,
        delta=delta,
        delta_s=e_detector,
        delta_m=e_detector,
        f1_decoy=f1_decoy,
        f1_pessimistic=f1_pess,
    )


@dataclass(frozen=True)
class ConditionalYields:
    """Photon-number resolved yields once dark counts are attributed.

    A dark click in a pulse that carried ``n`` photons is booked under ``n``:
    ``p_dark_t`` (vacuum), ``p_s_t`` (single) and ``p_m_t`` (multi) sum to
    ``p_d``.
    """

    p_dark_t: float
    p_s_t: float
    p_m_t: float
    delta_s_t: float
    delta_m_t: float


def _mixed_error(p_dark: float, e_detector: float, p: float) -> float:
    denom = p_dark + p
    if denom == 0:
        return 0.5
    return (p_dark / 2 + e_detector * p) / denom


def dark_adjusted(stats: DetectionStats, mu: float, p_dark: float, e_detector: float) -> ConditionalYields:
    if not mu > 0:
        raise DomainError(f"mu must be > 0, got {mu}")
    if not 0 <= p_dark < 1:
        raise DomainError(f"p_dark must lie in [0, 1), got {p_dark}")
    return ConditionalYields(
        p_dark_t=p_dark * math.exp(-mu),
        p_s_t=stats.p_s + p_dark * mu * math.exp(-mu),
        p_m_t=stats.p_m + p_dark * multi_photon_emission(mu),
        delta_s_t=_mixed_error(p_dark, e_detector, stats.p_s),
        delta_m_t=_mixed_error(p_dark, e_detector, stats.p_m),
    )


def key_bit_rate(preset: ExperimentPreset, r: float) -> float:
    """Key bits per second: source-limited ``nu_a * r`` capped by the detector rate."""
    if not 0 <= r <= 1:
        raise DomainError(f"key rate per pulse must lie in [0, 1], got {r}")
    return min(preset.nu_b, preset.nu_a * r)
