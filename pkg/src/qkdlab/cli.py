"""``qkdlab`` command line entry point."""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Optional, Sequence, Tuple, Union

from .channel import get_preset
from .config import load_config
from .decoy import (
    WEAK_MU_GUARD,
    format_estimate,
    multi_decoy_solve,
    read_observations,
    vacuum_consistency_check,
    weak_decoy_estimate,
)
from .errors import ConfigurationError, DomainError, MisuseError
from .postprocessing import PROTOCOLS
from .sweep import COMMANDS, SweepSpec, emit_csv, run_sweep

EXIT_OK, EXIT_CONFIG, EXIT_DOMAIN, EXIT_IO = 0, 2, 3, 4

_EC_MODE_ALIASES = {"interpolate": "interpolate", "regression": "least-squares-line", "least-squares-line": "least-squares-line"}


def _parse_range(text: str) -> Tuple[float, float, float]:
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected START:STOP:STEP, got {text!r}")
    try:
        return tuple(float(p) for p in parts)  # type: ignore[return-value]
    except ValueError:
        raise argparse.ArgumentTypeError(f"unparsable range {text!r}") from None


def _parse_mu(text: str) -> Union[float, str]:
    if text in ("optimal", "eta"):
        return text
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--mu takes a number, 'optimal' or 'eta', got {text!r}") from None


def _parse_protocols(text: str) -> Tuple[str, ...]:
    protos = tuple(p.strip() for p in text.split(",") if p.strip())
    bad = [p for p in protos if p not in PROTOCOLS]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown protocol(s) {', '.join(bad)}; choose from {', '.join(PROTOCOLS)}")
    return protos


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qkdlab",
        description="Key rates of weak-coherent-pulse BB84 links with and without decoy states.",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--preset", default="GYS", help="T8, G13, KTH or GYS (default GYS)")
    parser.add_argument("--config", help="key=value file overriding preset fields")
    parser.add_argument("--protocol", type=_parse_protocols, default=("gllp-decoy",), help="comma separated")
    parser.add_argument("--mu", type=_parse_mu, default=0.5, help="fixed mu, 'optimal' or 'eta'")
    parser.add_argument("--range", type=_parse_range, help="START:STOP:STEP (STEP in decades on log grids)")
    parser.add_argument("--log", dest="log_grid", action="store_true", default=None, help="log-spaced grid")
    parser.add_argument("--linear", dest="log_grid", action="store_false", help="linear grid")
    parser.add_argument("--distance", type=float, default=None, help="fiber length in km for qber-vs-mu")
    parser.add_argument("--loss-db", type=float, default=None, help="fiber loss in dB, instead of --distance")
    parser.add_argument("--threshold", type=float, default=0.0, help="cutoff threshold on rate per pulse")
    parser.add_argument("--ec-mode", default="interpolate", choices=sorted(_EC_MODE_ALIASES))
    parser.add_argument("--decoy-file", help="decoy observations, 'mu p_d delta' per line")
    parser.add_argument("--weak-guard", type=float, default=WEAK_MU_GUARD, help="max mu of a single weak decoy")
    parser.add_argument("--tolerance", type=float, default=0.05, help="relative vacuum-check tolerance")
    parser.add_argument("--jobs", type=int, default=1, help="worker processes for grid points")
    parser.add_argument("--gnuplot-friendly", action="store_true", help="tab instead of comma separators")
    parser.add_argument("-o", "--output", default="-", help="output path, '-' for stdout")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def _decoy_report(args, preset) -> str:
    if not args.decoy_file:
        raise ConfigurationError("decoy-solve needs --decoy-file")
    obs = read_observations(args.decoy_file)
    vacua = [o for o in obs if o.mu == 0]
    weak = sorted((o for o in obs if o.mu > 0), key=lambda o: o.mu)
    if not weak:
        raise ConfigurationError(f"{args.decoy_file}: no weak decoy (mu > 0) lines")
    lines = []
    if vacua:
        check = vacuum_consistency_check(vacua[0], preset, args.tolerance)
        lines += [
            f"vacuum_check={'pass' if check.passed else 'fail'}",
            f"vacuum_dark_residual={check.dark_residual!r}",
            f"vacuum_error_residual={check.error_residual!r}",
        ]
        p_dark = vacua[0].p_d_observed
    else:
        p_dark = preset.p_dark
    if len(weak) == 1:
        est = weak_decoy_estimate(weak[0], p_dark, args.weak_guard)
    else:
        est = multi_decoy_solve(weak, p_dark)
    return "\n".join(lines) + ("\n" if lines else "") + format_estimate(est)


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        preset = load_config(args.config, base=args.preset) if args.config else get_preset(args.preset)
        if args.command == "decoy-solve":
            text = _decoy_report(args, preset)
            if args.output in (None, "-"):
                sys.stdout.write(text)
            else:
                with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
                    fh.write(text)
            return EXIT_OK
        distance = args.distance
        if args.loss_db is not None:
            if distance is not None:
                raise ConfigurationError("give --distance or --loss-db, not both")
            if preset.alpha == 0:
                raise ConfigurationError("--loss-db needs a preset with alpha > 0")
            distance = args.loss_db / preset.alpha
        spec = SweepSpec(
            command=args.command,
            preset=preset,
            protocols=args.protocol,
            range=args.range,
            mu_policy=args.mu,
            ec_mode=_EC_MODE_ALIASES[args.ec_mode],
            threshold=args.threshold,
            distance=distance or 0.0,
            log_grid=args.log_grid,
            output=args.output,
            delimiter="\t" if args.gnuplot_friendly else ",",
        )
        rows = run_sweep(spec, jobs=args.jobs)
        emit_csv(rows, spec.output, spec.delimiter)
    except (ConfigurationError, MisuseError) as exc:
        print(f"qkdlab: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DomainError as exc:
        print(f"qkdlab: domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except OSError as exc:
        print(f"qkdlab: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
