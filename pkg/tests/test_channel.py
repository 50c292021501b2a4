import mpmath as mp
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracle
from qkdlab.channel import (
    PRESETS,
    ExperimentPreset,
    LinkEfficiencies,
    dark_adjusted,
    detection_stats,
    get_preset,
    i_photon_transmittance,
    key_bit_rate,
    link_efficiency,
    link_from_eta,
    multi_photon_emission,
)
from qkdlab.errors import ConfigurationError, DomainError


def _link(eta, p_dark=0.0):
    return LinkEfficiencies(t_ab=1.0, eta_bob=eta, eta=eta, p_dark=p_dark)


@pytest.mark.parametrize(
    "name, alpha, t_b, e_det, d_b, eta_d",
    [
        ("T8", 2.5, 8, 0.01, 5e-8, 0.5),
        ("G13", 0.32, 3.2, 0.0014, 8.2e-5, 0.17),
        ("KTH", 0.2, 1, 0.01, 2e-4, 0.18),
        ("GYS", 0.21, 5, 0.033, 8.5e-7, 0.12),
    ],
)
def test_presets_match_table(name, alpha, t_b, e_det, d_b, eta_d):
    p = PRESETS[name]
    assert (p.alpha, p.t_bob_db, p.e_detector, p.d_b, p.eta_d) == (alpha, t_b, e_det, d_b, eta_d)


def test_gys_bob_efficiency_override(gys):
    assert gys.bob_efficiency == 0.045
    assert PRESETS["KTH"].bob_efficiency == pytest.approx(10 ** -0.1 * 0.18)


def test_unknown_preset():
    with pytest.raises(ConfigurationError):
        get_preset("XYZ")


@pytest.mark.parametrize("kw", [{"alpha": -1}, {"e_detector": 0.6}, {"d_b": 1.0}, {"eta_d": 0}, {"q": 0}])
def test_preset_validation(kw):
    base = dict(name="x", alpha=0.2, t_bob_db=1, e_detector=0.01, d_b=1e-6, eta_d=0.1)
    base.update(kw)
    with pytest.raises(ConfigurationError):
        ExperimentPreset(**base)


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_zero_distance(name):
    link = link_efficiency(PRESETS[name], 0)
    assert link.t_ab == 1
    assert link.eta == link.eta_bob


def test_gys_100km(gys):
    link = link_efficiency(gys, 100)
    assert link.eta == pytest.approx(float(oracle.gys_eta(100)), rel=1e-13)
    assert link.eta == pytest.approx(3.574e-4, rel=1e-3)
    assert link.p_dark == pytest.approx(1.7e-6, rel=1e-14)


def test_negative_distance(gys):
    with pytest.raises(DomainError):
        link_efficiency(gys, -1)


def test_link_from_eta(t8):
    link = link_from_eta(t8, 1e-3)
    assert link.eta == 1e-3
    assert link.t_ab * link.eta_bob == pytest.approx(1e-3)
    big = link_from_eta(t8, 0.5)
    assert big.t_ab == 1 and big.eta == 0.5


@pytest.mark.parametrize("eta, i, expected", [(0.1, 1, 0.1), (0.1, 2, 0.19), (1.0, 5, 1.0), (0.3, 0, 0.0)])
def test_i_photon_transmittance(eta, i, expected):
    assert i_photon_transmittance(eta, i) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("eta", [-0.1, 1.1])
def test_i_photon_transmittance_domain(eta):
    with pytest.raises(DomainError):
        i_photon_transmittance(eta, 1)


@given(st.floats(0, 1), st.floats(0, 1), st.integers(1, 50))
def test_i_photon_transmittance_monotone(e1, e2, i):
    lo, hi = sorted((e1, e2))
    assert i_photon_transmittance(lo, i) <= i_photon_transmittance(hi, i) + 1e-15
    assert i_photon_transmittance(lo, i) <= i_photon_transmittance(lo, i + 1) + 1e-15


@pytest.mark.parametrize("x", [0, 1e-9, 1e-5, 3e-3, 0.00999, 0.01, 0.5, 3.0])
def test_multi_photon_emission(x):
    exact = 1 - (1 + mp.mpf(x)) * mp.exp(-mp.mpf(x))
    assert multi_photon_emission(x) == pytest.approx(float(exact), rel=1e-13, abs=1e-300)


def test_detection_stats_gys_zero_distance(gys):
    s = detection_stats(link_efficiency(gys, 0), 0.5, gys.e_detector)
    assert s.p_signal == pytest.approx(float(oracle.p_signal_series(0.045, 0.5)), rel=1e-13)
    assert s.p_s == pytest.approx(float(0.045 * oracle.poisson(0.5, 1)), rel=1e-13)
    assert s.p_signal == pytest.approx(2.2249e-2, rel=1e-4)
    assert s.p_s == pytest.approx(1.3647e-2, rel=1e-4)


def test_t8_plateau_value(t8):
    link = link_efficiency(t8, 3 / t8.alpha)
    assert link.t_ab == pytest.approx(10 ** -0.3)
    assert detection_stats(link, 0.1, t8.e_detector).delta == pytest.approx(0.01, abs=5e-4)


def test_dark_count_only_limit():
    s = detection_stats(_link(0.0, 1e-6), 0.5, 0.02)
    assert s.p_d == 1e-6
    assert s.delta == 0.5
    assert s.p_signal == 0


@pytest.mark.parametrize("mu", [0, -0.1])
def test_detection_stats_rejects_nonpositive_mu(mu):
    with pytest.raises(DomainError):
        detection_stats(_link(0.1), mu, 0.01)


def test_f1_pessimistic_clamped():
    # strong source on a short link: S_M exceeds p_signal
    s = detection_stats(_link(0.01, 1e-6), 0.9, 0.01)
    assert s.s_m > s.p_signal
    assert s.f1_pessimistic == 0


etas = st.floats(1e-8, 1.0)
mus = st.floats(1e-6, 5.0)


@given(etas, mus)
@settings(max_examples=200)
def test_decomposition_and_bounds(eta, mu):
    s = detection_stats(_link(eta, 1.7e-6), mu, 0.033)
    assert s.p_s + s.p_m == pytest.approx(s.p_signal, abs=1e-12)
    for p in (s.p_signal, s.p_s, s.p_m, s.s_m, s.p_d, s.f1_decoy, s.f1_pessimistic):
        assert 0 <= p <= 1
    assert 0 <= s.delta <= 0.5
    assert s.delta >= 0.033 * s.p_signal / s.p_d


@given(etas, st.floats(1e-6, 4.0), st.floats(1.0001, 1.5))
def test_monotone_in_mu(eta, mu, factor):
    a = detection_stats(_link(eta, 1e-6), mu, 0.01)
    b = detection_stats(_link(eta, 1e-6), mu * factor, 0.01)
    assert b.p_d >= a.p_d
    assert b.delta <= a.delta + 1e-15


@given(st.floats(1e-8, 0.5), mus)
def test_monotone_in_eta(eta, mu):
    a = detection_stats(_link(eta, 1e-6), mu, 0.01)
    b = detection_stats(_link(min(1.0, eta * 2), 1e-6), mu, 0.01)
    assert b.p_d >= a.p_d


def test_delta_tends_to_half():
    deltas = [detection_stats(_link(eta, 1e-6), 0.5, 0.01).delta for eta in (1e-6, 1e-9, 1e-12)]
    assert deltas == sorted(deltas)
    assert deltas[-1] == pytest.approx(0.5, abs=1e-5)


def test_dark_adjusted_gys_100km(gys):
    link = link_efficiency(gys, 100)
    s = detection_stats(link, 0.5, gys.e_detector)
    y = dark_adjusted(s, 0.5, link.p_dark, gys.e_detector)
    # oracle values from tests/oracle.py at 50 digits
    assert s.p_s == pytest.approx(1.0840149635303025e-4, rel=1e-12)
    assert y.p_s_t == pytest.approx(1.0891704741378599e-4, rel=1e-12)
    assert y.delta_s_t == pytest.approx(0.040210619531041006, rel=1e-12)
    assert y.p_dark_t + y.p_s_t + y.p_m_t == pytest.approx(s.p_d, rel=1e-12)


def test_dark_adjusted_no_dark_counts():
    s = detection_stats(_link(0.01), 0.5, 0.02)
    y = dark_adjusted(s, 0.5, 0.0, 0.02)
    assert y.p_s_t == s.p_s
    assert y.delta_s_t == pytest.approx(0.02)


def test_dark_adjusted_pure_dark():
    s = detection_stats(_link(0.0, 1e-6), 0.5, 0.02)
    y = dark_adjusted(s, 0.5, 1e-6, 0.02)
    assert y.delta_s_t == 0.5


@given(etas, mus, st.floats(0, 1e-3))
def test_dark_counts_only_add(eta, mu, p_dark):
    s = detection_stats(_link(eta, p_dark), mu, 0.01)
    y = dark_adjusted(s, mu, p_dark, 0.01)
    assert y.p_s_t >= s.p_s
    assert y.p_m_t >= s.p_m
    assert 0 <= y.delta_s_t <= 0.5 and 0 <= y.delta_m_t <= 0.5


@pytest.mark.parametrize("r, expected", [(1e-6, 1e3), (0.5, 1e6), (1e-3, 1e6)])
def test_key_bit_rate(gys, r, expected):
    preset = gys.with_overrides(nu_a=1e9, nu_b=1e6)
    assert key_bit_rate(preset, r) == pytest.approx(expected)


def test_key_bit_rate_branches_agree_at_boundary(gys):
    preset = gys.with_overrides(nu_a=1e9, nu_b=1e6)
    assert preset.nu_a * 1e-3 == pytest.approx(preset.nu_b)


@pytest.mark.parametrize("r", [-0.1, 1.5])
def test_key_bit_rate_domain(gys, r):
    with pytest.raises(DomainError):
        key_bit_rate(gys, r)
