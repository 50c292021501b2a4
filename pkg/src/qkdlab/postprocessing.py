"""Error-correction / privacy-amplification residues and key-rate assembly."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from .channel import (
    ConditionalYields,
    DetectionStats,
    ExperimentPreset,
    LinkEfficiencies,
    dark_adjusted,
    detection_stats,
    key_bit_rate,
    link_efficiency,
)
from .errors import ConfigurationError, DomainError

__all__ = [
    "PROTOCOLS",
    "EC_MODES",
    "EcEfficiencyTable",
    "DEFAULT_EC_TABLE",
    "TaggedClass",
    "RateResult",
    "binary_entropy",
    "ec_efficiency",
    "residue_lutkenhaus",
    "residue_gllp",
    "residue_tagged_general",
    "residue_decoy",
    "rate_for_link",
    "rate_for_protocol",
]

PROTOCOLS = ("lutkenhaus", "gllp", "gllp-decoy", "upper-bound", "asymptotic")
EC_MODES = ("interpolate", "least-squares-line")


def binary_entropy(x: float) -> float:
    """Binary Shannon entropy in bits, with ``H2(0) = H2(1) = 0``."""
    if not 0 <= x <= 1:
        raise DomainError(f"binary entropy argument must lie in [0, 1], got {x}")
    if x == 0 or x == 1:
        return 0.0
    return -x * math.log2(x) - (1 - x) * math.log2(1 - x)


@dataclass(frozen=True)
class EcEfficiencyTable:
    """Error-correction inefficiency ``f(delta) >= 1`` sampled at a few QBERs.

    ``interpolate`` is piecewise linear between knots and flat outside them;
    ``least-squares-line`` fits one straight line through all knots and
    clamps it below at 1.
    """

    knots: Tuple[Tuple[float, float], ...]
    mode: str = "interpolate"
    _line: Tuple[float, float] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not self.knots:
            raise ConfigurationError("EC efficiency table is empty")
        if self.mode not in EC_MODES:
            raise ConfigurationError(f"unknown EC mode {self.mode!r}; choose one of {', '.join(EC_MODES)}")
        qbers = [k[0] for k in self.knots]
        if any(b <= a for a, b in zip(qbers, qbers[1:])):
            raise ConfigurationError("EC table QBER values must be strictly increasing")
        if any(f < 1 for _, f in self.knots):
            raise ConfigurationError("EC table factors must be >= 1")
        if len(self.knots) >= 2:
            slope, intercept = np.polyfit(qbers, [k[1] for k in self.knots], 1)
        else:
            slope, intercept = 0.0, self.knots[0][1]
        object.__setattr__(self, "_line", (float(slope), float(intercept)))

    def with_mode(self, mode: str) -> "EcEfficiencyTable":
        return EcEfficiencyTable(self.knots, mode)

    def __call__(self, delta: float) -> float:
        return ec_efficiency(self, delta)

    @classmethod
    def from_file(cls, path: Union[str, Path], mode: str = "interpolate") -> "EcEfficiencyTable":
        """Read ``qber factor`` pairs, one per line; ``#`` starts a comment."""
        knots = []
        text = Path(path).read_text(encoding="utf-8")
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.replace(",", " ").split()
            if len(parts) != 2:
                raise ConfigurationError(f"{path}:{lineno}: expected two columns, got {raw!r}")
            try:
                knots.append((float(parts[0]), float(parts[1])))
            except ValueError:
                raise ConfigurationError(f"{path}:{lineno}: unparsable number in {raw!r}") from None
        return cls(tuple(knots), mode)


DEFAULT_EC_TABLE = EcEfficiencyTable(((0.01, 1.16), (0.05, 1.16), (0.1, 1.22), (0.15, 1.35)))


def ec_efficiency(table: EcEfficiencyTable, delta: float) -> float:
    if not 0 <= delta <= 0.5:
        raise DomainError(f"QBER must lie in [0, 1/2], got {delta}")
    if table.mode == "least-squares-line":
        slope, intercept = table._line
        return max(1.0, slope * delta + intercept)
    qbers = [k[0] for k in table.knots]
    factors = [k[1] for k in table.knots]
    return float(np.interp(delta, qbers, factors))


def _check_residue_args(delta: float, f1: float) -> None:
    if not 0 <= delta <= 0.5:
        raise DomainError(f"QBER must lie in [0, 1/2], got {delta}")
    if not 0 <= f1 <= 1:
        raise DomainError(f"untagged fraction must lie in [0, 1], got {f1}")


def residue_lutkenhaus(delta: float, f1: float, table: EcEfficiencyTable = DEFAULT_EC_TABLE) -> float:
    """Residue under individual attacks when all errors sit on single photons."""
    _check_residue_args(delta, f1)
    if f1 == 0 or delta > f1 / 2:
        return 0.0
    x = delta / f1
    pa = f1 * (1 - math.log2(1 + 4 * x - 4 * x * x))
    return max(pa - ec_efficiency(table, delta) * binary_entropy(delta), 0.0)


def residue_gllp(delta: float, f1: float, table: EcEfficiencyTable = DEFAULT_EC_TABLE) -> float:
    """GLLP residue: privacy amplification on the untagged (single-photon) bits only."""
    _check_residue_args(delta, f1)
    if f1 == 0 or delta > f1 / 2:
        return 0.0
    pa = f1 * (1 - binary_entropy(delta / f1))
    return max(pa - ec_efficiency(table, delta) * binary_entropy(delta), 0.0)


@dataclass(frozen=True)
class TaggedClass:
    probability_fraction: float
    phase_error: float

    def __post_init__(self) -> None:
        if not 0 <= self.probability_fraction <= 1:
            raise DomainError(f"class fraction must lie in [0, 1], got {self.probability_fraction}")
        if not 0 <= self.phase_error <= 0.5:
            raise DomainError(f"phase error must lie in [0, 1/2], got {self.phase_error}")


def residue_tagged_general(
    delta_b: float, classes: Sequence[TaggedClass], table: EcEfficiencyTable = DEFAULT_EC_TABLE
) -> float:
    """One round of error correction, then privacy amplification class by class.

    With a single class at ``phase_error == delta_b`` and ``f = 1`` this is the
    CSS rate ``1 - 2 H2(delta_b)``.
    """
    if not classes:
        raise DomainError("at least one tagged class is required")
    if sum(c.probability_fraction for c in classes) > 1 + 1e-9:
        raise DomainError("tagged class fractions sum to more than 1")
    ec = ec_efficiency(table, delta_b) * binary_entropy(delta_b)
    pa = math.fsum(c.probability_fraction * (1 - binary_entropy(c.phase_error)) for c in classes)
    return max(pa - ec, 0.0)


def decoy_classes(stats: DetectionStats, yields: ConditionalYields) -> Tuple[TaggedClass, ...]:
    """Single-photon, vacuum (dark) and multi-photon classes of a decoy run."""
    p_d = stats.p_d
    return (
        TaggedClass(min(yields.p_s_t / p_d, 1.0), yields.delta_s_t),
        TaggedClass(min(yields.p_dark_t / p_d, 1.0), 0.5),
        TaggedClass(min(yields.p_m_t / p_d, 1.0), 0.5),
    )


def residue_decoy(
    stats: DetectionStats, yields: ConditionalYields, table: EcEfficiencyTable = DEFAULT_EC_TABLE
) -> float:
    if not stats.p_d > 0:
        raise DomainError("no detections (p_d = 0); decoy residue undefined")
    return residue_tagged_general(stats.delta, decoy_classes(stats, yields), table)


@dataclass(frozen=True)
class RateResult:
    """Key rate of one protocol at one operating point.

    ``r == q * stats.p_d * eta_post`` holds for every protocol, so the rate
    can be audited from the intermediates alone.
    """

    protocol: str
    eta_post: float
    r: float
    b: float
    q: float
    mu: float
    distance: Optional[float]
    link: LinkEfficiencies
    stats: DetectionStats
    yields: Optional[ConditionalYields] = None


def rate_for_link(
    protocol: str,
    preset: ExperimentPreset,
    link: LinkEfficiencies,
    mu: float,
    table: EcEfficiencyTable = DEFAULT_EC_TABLE,
    distance: Optional[float] = None,
) -> RateResult:
    """Key rate per pulse for ``protocol`` on an explicit link."""
    if protocol not in PROTOCOLS:
        raise ConfigurationError(f"unknown protocol {protocol!r}; choose from {', '.join(PROTOCOLS)}")
    e_det = preset.e_detector
    q = preset.q
    stats = detection_stats(link, mu, e_det)
    yields = None
    if protocol == "lutkenhaus":
        eta_post = residue_lutkenhaus(stats.delta, stats.f1_pessimistic, table)
    elif protocol == "gllp":
        eta_post = residue_gllp(stats.delta, stats.f1_pessimistic, table)
    else:
        yields = dark_adjusted(stats, mu, link.p_dark, e_det)
        if stats.p_d == 0:
            eta_post = 0.0
        elif protocol == "gllp-decoy":
            eta_post = residue_decoy(stats, yields, table)
        elif protocol == "upper-bound":
            eta_post = yields.p_s_t * (1 - binary_entropy(e_det)) / stats.p_d
        else:
            # dark counts neglected: p_D is the bare signal probability
            h = binary_entropy(e_det)
            gain = -stats.p_signal * ec_efficiency(table, e_det) * h + stats.p_s * (1 - h)
            eta_post = max(gain, 0.0) / stats.p_d
    r = q * stats.p_d * eta_post
    return RateResult(
        protocol=protocol,
        eta_post=eta_post,
        r=r,
        b=key_bit_rate(preset, min(r, 1.0)),
        q=q,
        mu=mu,
        distance=distance,
        link=link,
        stats=stats,
        yields=yields,
    )


def rate_for_protocol(
    protocol: str,
    preset: ExperimentPreset,
    distance: float,
    mu: float,
    table: EcEfficiencyTable = DEFAULT_EC_TABLE,
) -> RateResult:
    return rate_for_link(protocol, preset, link_efficiency(preset, distance), mu, table, distance=distance)
