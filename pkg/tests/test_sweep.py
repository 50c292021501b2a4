import io

import pytest

from qkdlab.channel import PRESETS
from qkdlab.errors import ConfigurationError, DomainError
from qkdlab.sweep import SweepSpec, emit_csv, format_number, make_grid, run_sweep


def test_emit_single_row():
    buf = io.StringIO()
    text = emit_csv([{"distance": 0, "r": 0.5}], buf)
    assert text == "distance,r\n0.000000000e0,5.000000000e-1\n"
    assert buf.getvalue() == text


@pytest.mark.parametrize(
    "x, expected",
    [(1.0, "1.000000000e0"), (-2.5e-12, "-2.500000000e-12"), (123456.789, "1.234567890e5"), (-0.0, "0.000000000e0"),
     (float("nan"), "nan"), ("gllp", "gllp"), (True, "1.000000000e0")],
)
def test_format_number(x, expected):
    assert format_number(x) == expected


def test_emit_rejects_ragged_and_empty():
    with pytest.raises(DomainError):
        emit_csv([], io.StringIO())
    with pytest.raises(DomainError):
        emit_csv([{"a": 1}, {"b": 2}], io.StringIO())


def test_emit_to_file(tmp_path):
    path = tmp_path / "out.csv"
    emit_csv([{"a": 1.0}], path, "\t")
    assert path.read_bytes() == b"a\n1.000000000e0\n"


def test_emit_unwritable():
    with pytest.raises(OSError):
        emit_csv([{"a": 1.0}], "/nonexistent-dir/out.csv")


def test_grids():
    assert make_grid(0, 160, 1) == [float(k) for k in range(161)]
    assert make_grid(1e-5, 1, 1, log=True) == pytest.approx([1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1])
    with pytest.raises(ConfigurationError):
        make_grid(0, 1, 0.1, log=True)


@pytest.mark.parametrize(
    "kw",
    [
        {"command": "plot"},
        {"command": "rate-vs-distance", "protocols": ()},
        {"command": "rate-vs-distance", "protocols": ("bb84",)},
        {"command": "rate-vs-distance", "range": (0, 10, 0)},
        {"command": "rate-vs-distance", "range": (10, 0, 1)},
        {"command": "rate-vs-distance", "mu_policy": "best"},
        {"command": "rate-vs-distance", "ec_mode": "spline"},
    ],
)
def test_spec_validation(kw):
    with pytest.raises(ConfigurationError):
        SweepSpec(preset=PRESETS["GYS"], **kw)


def test_rate_sweep_161_points():
    spec = SweepSpec("rate-vs-distance", PRESETS["GYS"], ("gllp-decoy",), (0, 160, 1), 0.5)
    rows = run_sweep(spec)
    text = emit_csv(rows, io.StringIO())
    assert len(text.splitlines()) == 162
    zero = [row["distance"] for row in rows if row["r"] == 0]
    assert zero[0] == pytest.approx(137)


def test_rows_are_auditable():
    spec = SweepSpec("rate-vs-distance", PRESETS["GYS"], ("lutkenhaus", "gllp", "gllp-decoy", "upper-bound", "asymptotic"),
                     (0, 150, 10), "optimal")
    rows = run_sweep(spec)
    text = emit_csv(rows, io.StringIO())
    header, *lines = text.splitlines()
    cols = header.split(",")
    for line in lines:
        row = dict(zip(cols, line.split(",")))
        r = float(row["r"])
        again = float(row["q"]) * float(row["p_d"]) * float(row["eta_post"])
        assert again == pytest.approx(r, rel=1e-9, abs=1e-300)


def test_sweep_deterministic_across_workers():
    spec = SweepSpec("rate-vs-distance", PRESETS["GYS"], ("gllp", "gllp-decoy"), (0, 60, 5), "optimal")
    a = emit_csv(run_sweep(spec, jobs=1), io.StringIO())
    b = emit_csv(run_sweep(spec, jobs=1), io.StringIO())
    c = emit_csv(run_sweep(spec, jobs=3), io.StringIO())
    assert a == b == c


def test_qber_vs_mu_plateau():
    t8 = PRESETS["T8"]
    spec = SweepSpec("qber-vs-mu", t8, range=(1e-5, 1, 0.25), distance=3 / t8.alpha)
    rows = run_sweep(spec)
    deltas = {round(r["mu"], 12): r["delta"] for r in rows}
    assert deltas[1e-5] > deltas[1e-4] > deltas[1e-2]
    assert deltas[1e-2] == pytest.approx(0.01, abs=5e-4)


def test_qber_vs_distance_rises():
    spec = SweepSpec("qber-vs-distance", PRESETS["GYS"], range=(0, 150, 50), mu_policy=0.1)
    deltas = [r["delta"] for r in run_sweep(spec)]
    assert deltas == sorted(deltas)
    with pytest.raises(ConfigurationError):
        run_sweep(SweepSpec("qber-vs-distance", PRESETS["GYS"], mu_policy="optimal"))


def test_optimal_mu_vs_eta_columns():
    spec = SweepSpec("optimal-mu-vs-eta", PRESETS["T8"], ("gllp",), (1e-2, 1e-1, 1))
    rows = run_sweep(spec)
    assert [r["eta_target"] for r in rows] == pytest.approx([1e-2, 1e-1])
    assert all(r["converged"] == 1 for r in rows)


def test_optimal_mu_vs_distance():
    spec = SweepSpec("optimal-mu-vs-distance", PRESETS["GYS"], ("gllp-decoy",), (0, 100, 50))
    rows = run_sweep(spec)
    for r in rows:
        assert abs(r["mu_opt"] - r["mu_analytic"]) < 0.1


def test_cutoff_rows():
    spec = SweepSpec("cutoff", PRESETS["GYS"], ("gllp-decoy",), mu_policy=0.5, threshold=1e-6)
    (row,) = run_sweep(spec)
    assert row["protocol"] == "gllp-decoy"
    assert 125 < row["distance"] < 140


def test_grid_point_reported_in_errors():
    spec = SweepSpec("qber-vs-mu", PRESETS["GYS"], range=(0.5, 1.0, 0.5), log_grid=False, distance=-1.0)
    with pytest.raises(DomainError, match="grid point 0.5"):
        run_sweep(spec)
