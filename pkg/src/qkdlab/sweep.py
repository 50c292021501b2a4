"""Parameter sweeps behind the figure-reproducing CLI commands, and CSV output.

Grid points are independent, so they may be farmed out to worker processes;
rows always come back in grid order and the emitted bytes do not depend on
the number of workers.
"""

from __future__ import annotations

import io
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

from .channel import ExperimentPreset, dark_adjusted, detection_stats, link_efficiency, link_from_eta
from .errors import ConfigurationError, DomainError, QKDLabError
from .optimizer import (
    cutoff_distance,
    maximize_rate_on_link,
    optimal_mu_decoy_approx,
    optimal_mu_no_decoy_approx,
    MU_BRACKET,
)
from .postprocessing import DEFAULT_EC_TABLE, EC_MODES, PROTOCOLS, EcEfficiencyTable, rate_for_link

__all__ = ["COMMANDS", "SweepSpec", "make_grid", "run_sweep", "format_number", "emit_csv"]

Row = Dict[str, Union[float, int, str]]

COMMANDS = (
    "qber-vs-mu",
    "qber-vs-distance",
    "rate-vs-distance",
    "optimal-mu-vs-eta",
    "optimal-mu-vs-distance",
    "decoy-solve",
    "cutoff",
)
_RATE_COMMANDS = {"rate-vs-distance", "optimal-mu-vs-eta", "optimal-mu-vs-distance", "cutoff"}
_LOG_BY_DEFAULT = {"qber-vs-mu", "optimal-mu-vs-eta"}
_DEFAULT_RANGES = {
    "qber-vs-mu": (1e-5, 1.0, 0.05),
    "qber-vs-distance": (0.0, 160.0, 1.0),
    "rate-vs-distance": (0.0, 160.0, 1.0),
    "optimal-mu-vs-eta": (1e-4, 1e-1, 0.1),
    "optimal-mu-vs-distance": (0.0, 160.0, 1.0),
}


@dataclass(frozen=True)
class SweepSpec:
    """One CLI run.

    For log-spaced grids (``log_grid``; default for the commands sweeping mu
    or eta) ``range`` holds the start and stop values and a step in decades.
    """

    command: str
    preset: ExperimentPreset
    protocols: Tuple[str, ...] = ("gllp-decoy",)
    range: Optional[Tuple[float, float, float]] = None
    mu_policy: Union[float, str] = 0.5
    ec_mode: str = "interpolate"
    threshold: float = 0.0
    distance: float = 0.0
    log_grid: Optional[bool] = None
    decoy_file: Optional[str] = None
    output: Optional[str] = None
    delimiter: str = ","

    def __post_init__(self) -> None:
        if self.command not in COMMANDS:
            raise ConfigurationError(f"unknown command {self.command!r}; choose from {', '.join(COMMANDS)}")
        if self.ec_mode not in EC_MODES:
            raise ConfigurationError(f"unknown EC mode {self.ec_mode!r}")
        bad = [p for p in self.protocols if p not in PROTOCOLS]
        if bad:
            raise ConfigurationError(f"unknown protocol(s) {', '.join(bad)}; choose from {', '.join(PROTOCOLS)}")
        if self.command in _RATE_COMMANDS and not self.protocols:
            raise ConfigurationError(f"{self.command} needs at least one protocol")
        if self.range is not None:
            start, stop, step = self.range
            if not step > 0:
                raise ConfigurationError(f"range step must be > 0, got {step}")
            if not start <= stop:
                raise ConfigurationError(f"range start {start} exceeds stop {stop}")
        if isinstance(self.mu_policy, str) and self.mu_policy not in ("optimal", "eta"):
            raise ConfigurationError(f"mu policy must be a number, 'optimal' or 'eta', got {self.mu_policy!r}")
        if not isinstance(self.mu_policy, str) and not self.mu_policy > 0:
            raise ConfigurationError(f"fixed mu must be > 0, got {self.mu_policy}")
        if self.threshold < 0:
            raise ConfigurationError(f"threshold must be >= 0, got {self.threshold}")

    @property
    def table(self) -> EcEfficiencyTable:
        return DEFAULT_EC_TABLE.with_mode(self.ec_mode)

    @property
    def uses_log_grid(self) -> bool:
        return self.command in _LOG_BY_DEFAULT if self.log_grid is None else self.log_grid

    def grid(self) -> List[float]:
        rng = self.range if self.range is not None else _DEFAULT_RANGES.get(self.command)
        if rng is None:
            raise ConfigurationError(f"{self.command} does not take a range")
        return make_grid(*rng, log=self.uses_log_grid)


def make_grid(start: float, stop: float, step: float, log: bool = False) -> List[float]:
    """Inclusive grid ``start, start+step, ...``; with ``log`` the step is in decades."""
    if not step > 0 or start > stop:
        raise ConfigurationError(f"invalid range {start}:{stop}:{step}")
    if log:
        if not start > 0:
            raise ConfigurationError("log-spaced grids need a positive start")
        lo, hi = math.log10(start), math.log10(stop)
        n = int(math.floor((hi - lo) / step + 1e-9))
        return [10 ** (lo + k * step) for k in range(n + 1)]
    n = int(math.floor((stop - start) / step + 1e-9))
    return [start + k * step for k in range(n + 1)]


def _link_row(spec: SweepSpec, mu: float, distance: float) -> Row:
    link = link_efficiency(spec.preset, distance)
    s = detection_stats(link, mu, spec.preset.e_detector)
    return {
        "mu": mu,
        "distance": distance,
        "eta": link.eta,
        "p_dark": link.p_dark,
        "p_signal": s.p_signal,
        "p_s": s.p_s,
        "p_m": s.p_m,
        "p_d": s.p_d,
        "delta": s.delta,
        "f1_decoy": s.f1_decoy,
        "f1_pessimistic": s.f1_pessimistic,
    }


def _rate_row(spec: SweepSpec, protocol: str, distance: float) -> Row:
    preset, table = spec.preset, spec.table
    link = link_efficiency(preset, distance)
    if spec.mu_policy == "optimal":
        mu = maximize_rate_on_link(protocol, preset, link, MU_BRACKET, 1e-4, table).argmax
    elif spec.mu_policy == "eta":
        mu = link.eta
    else:
        mu = float(spec.mu_policy)
    res = rate_for_link(protocol, preset, link, mu, table, distance=distance)
    s = res.stats
    y = res.yields or dark_adjusted(s, mu, link.p_dark, preset.e_detector)
    return {
        "distance": distance,
        "protocol": protocol,
        "mu": mu,
        "eta": link.eta,
        "p_d": s.p_d,
        "delta": s.delta,
        "f1_pessimistic": s.f1_pessimistic,
        "f1_decoy": s.f1_decoy,
        "p_s_tilde": y.p_s_t,
        "delta_s_tilde": y.delta_s_t,
        "eta_post": res.eta_post,
        "q": res.q,
        "r": res.r,
        "b": res.b,
    }


def _analytic_mu(protocol: str, preset: ExperimentPreset, eta: float) -> float:
    try:
        if protocol in ("lutkenhaus", "gllp"):
            return optimal_mu_no_decoy_approx(eta) if eta < 1 else float("nan")
        if protocol == "upper-bound":
            return 1.0
        return optimal_mu_decoy_approx(preset.e_detector)
    except DomainError:
        return float("nan")


def _optimum_row(spec: SweepSpec, protocol: str, link, key: str, x: float) -> Row:
    preset = spec.preset
    tol = min(1e-4, 1e-2 * link.eta)
    res = maximize_rate_on_link(protocol, preset, link, MU_BRACKET, tol, spec.table)
    return {
        key: x,
        "protocol": protocol,
        "eta": link.eta,
        "mu_opt": res.argmax,
        "mu_over_eta": res.argmax / link.eta,
        "r_opt": res.value,
        "converged": int(res.converged),
        "mu_analytic": _analytic_mu(protocol, preset, link.eta),
    }


def _point(args: Tuple[SweepSpec, float]) -> List[Row]:
    spec, x = args
    cmd = spec.command
    try:
        if cmd == "qber-vs-mu":
            return [_link_row(spec, x, spec.distance)]
        if cmd == "qber-vs-distance":
            return [_link_row(spec, float(spec.mu_policy), x)]
        if cmd == "rate-vs-distance":
            return [_rate_row(spec, p, x) for p in spec.protocols]
        if cmd == "optimal-mu-vs-eta":
            link = link_from_eta(spec.preset, x)
            return [_optimum_row(spec, p, link, "eta_target", x) for p in spec.protocols]
        if cmd == "optimal-mu-vs-distance":
            link = link_efficiency(spec.preset, x)
            return [_optimum_row(spec, p, link, "distance", x) for p in spec.protocols]
    except QKDLabError as exc:
        raise type(exc)(f"{cmd} at grid point {x!r}: {exc}") from None
    raise ConfigurationError(f"{cmd} is not a grid sweep")


def _cutoff_rows(spec: SweepSpec) -> List[Row]:
    rows = []
    for p in spec.protocols:
        res = cutoff_distance(p, spec.preset, spec.mu_policy, spec.threshold, spec.table)
        rows.append(
            {
                "protocol": p,
                "mu_policy": str(spec.mu_policy),
                "threshold": spec.threshold,
                "distance": res.argmax,
                "r": res.value,
                "bracket_hi": res.bracket[1],
                "iterations": res.iterations,
            }
        )
    return rows


def run_sweep(spec: SweepSpec, jobs: int = 1) -> List[Row]:
    """Evaluate every grid point of ``spec``; one row per (point, protocol)."""
    if spec.command == "cutoff":
        return _cutoff_rows(spec)
    if spec.command == "qber-vs-distance" and isinstance(spec.mu_policy, str):
        raise ConfigurationError("qber-vs-distance needs a fixed --mu")
    if spec.command == "decoy-solve":
        raise ConfigurationError("decoy-solve emits key=value lines, not a sweep")
    tasks = [(spec, x) for x in spec.grid()]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_point, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        chunks = [_point(t) for t in tasks]
    return [row for chunk in chunks for row in chunk]


def format_number(x: Union[float, int, str]) -> str:
    """Scientific notation with a 9-digit fraction and an unpadded exponent."""
    if isinstance(x, str):
        return x
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if x == 0:
        x = 0.0
    mantissa, exponent = f"{x:.9e}".split("e")
    return f"{mantissa}e{int(exponent)}"


def emit_csv(
    rows: Sequence[Row], destination: Union[str, Path, None, io.TextIOBase] = None, delimiter: str = ","
) -> str:
    """Render ``rows`` and write them to a path, a text stream, or stdout (``None`` / ``"-"``)."""
    if not rows:
        raise DomainError("no rows to emit")
    header = list(rows[0])
    lines = [delimiter.join(header)]
    for row in rows:
        if list(row) != header:
            raise DomainError("rows do not share one column layout")
        lines.append(delimiter.join(format_number(row[k]) for k in header))
    text = "\n".join(lines) + "\n"
    if destination is None or destination == "-":
        sys.stdout.write(text)
    elif hasattr(destination, "write"):
        destination.write(text)
    else:
        with open(destination, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    return text
