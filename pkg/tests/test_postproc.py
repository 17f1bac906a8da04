import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from planar_em.fdtd.solver import PortRecord
from planar_em.postproc import (
    ContractError,
    OutOfBandError,
    SParamMatrix,
    SingularEccError,
    band_report,
    dft,
    dip_frequency,
    ecc,
    extract_sparams,
    matched_intervals,
    mirror_run,
    port_spectra,
    read_s2p,
    write_s2p,
)
from planar_em.postproc.currents import current_from_jump

BAND = (1.5e9, 7.5e9)
FREQS = np.linspace(2e9, 7e9, 201)


def _rec(pid, v, i, excited, dt=1e-12):
    # synthetic records sample V and I at the same instants
    return PortRecord(pid, dt, v, i, excited, v_t0=dt, i_t0=dt, band=BAND)


# -- spectra -----------------------------------------------------------------

def test_sinusoid_normalization():
    dt, n, f0, amp = 1e-11, 20000, 3e9, 2.0
    t = np.arange(n) * dt
    x = amp * np.cos(2 * np.pi * f0 * t)
    assert abs(dft(x, [f0], dt)[0]) == pytest.approx(amp / 2 * n * dt, rel=1e-3)


def test_zero_record_zero_spectra():
    r = _rec(1, np.zeros(100), np.zeros(100), True)
    v, i = port_spectra(r, FREQS)
    assert not v.any() and not i.any()


def test_two_tone_leakage_windowed():
    dt, n = 2e-11, 4000
    t = np.arange(n) * dt
    f1, f2 = 3.0e9, 4.5e9
    x = np.cos(2 * np.pi * f1 * t) + 1e-3 * np.cos(2 * np.pi * f2 * t)
    fr = np.array([f1, f2])
    X = np.abs(dft(x, fr, dt, window="blackmanharris"))
    only1 = np.abs(dft(np.cos(2 * np.pi * f1 * t), [f2], dt, window="blackmanharris"))[0]
    assert 20 * np.log10(only1 / X[0]) < -80
    assert X[1] / X[0] == pytest.approx(1e-3, rel=0.02)


def test_out_of_band_error():
    r = _rec(1, np.zeros(10), np.zeros(10), True)
    with pytest.raises(OutOfBandError):
        port_spectra(r, [1.0e9])


# -- S-parameters ---------------------------------------------------------------

def _pulse(n=6000, dt=1e-12):
    t = np.arange(n) * dt
    t0, tau = 0.7e-9, 0.11e-9
    return np.sin(2 * np.pi * 4.5e9 * (t - t0)) * np.exp(-0.5 * ((t - t0) / tau) ** 2)


def test_matched_termination_gives_zero():
    v = _pulse()
    i = v / 50.0
    run = {1: _rec(1, v, i, True)}
    s = extract_sparams(run, freqs=FREQS)
    assert np.max(np.abs(s.s)) < 1e-12


def test_open_circuit_gives_plus_one():
    v = _pulse()
    s = extract_sparams({1: _rec(1, v, np.zeros_like(v), True)}, freqs=FREQS)
    assert np.allclose(s.s[:, 0, 0], 1.0, atol=1e-12)


def test_two_port_synthetic():
    # port 1 sees a 50 ohm match with half the wave transmitted to port 2
    v = _pulse()
    i = v / 50.0
    r1 = {1: _rec(1, v, i, True), 2: _rec(2, 0.5 * v, -0.5 * v / 50.0, False)}
    r2 = mirror_run(r1)
    s = extract_sparams(r1, r2, freqs=FREQS)
    # b2 = (V2 - Z0 I2)/(2 sqrt Z0) = V/ sqrt(Z0) * 0.5; a1 = V / sqrt(Z0)
    assert np.allclose(s[2, 1], 0.5, atol=1e-12)
    assert np.allclose(s[1, 2], 0.5, atol=1e-12)
    assert np.allclose(s[1, 1], 0.0, atol=1e-12)


def test_mismatched_runs_rejected():
    v = _pulse()
    r1 = {1: _rec(1, v, v / 50, True), 2: _rec(2, v, v / 50, False)}
    r2 = {1: _rec(1, v, v / 50, False, dt=2e-12), 2: _rec(2, v, v / 50, True, dt=2e-12)}
    with pytest.raises(ContractError):
        extract_sparams(r1, r2, freqs=FREQS)
    with pytest.raises(ContractError):
        extract_sparams(r1, r1, freqs=FREQS)


# -- ECC ------------------------------------------------------------------------

def _mat(s11, s21, s12, s22, n=1):
    s = np.zeros((n, 2, 2), complex)
    s[:, 0, 0], s[:, 1, 0], s[:, 0, 1], s[:, 1, 1] = s11, s21, s12, s22
    return SParamMatrix(np.linspace(2e9, 3e9, n) if n > 1 else np.array([2e9]), s)


def test_ecc_zero_matrix():
    assert ecc(_mat(0, 0, 0, 0)).rho_e[0] == 0.0


def test_ecc_zero_reflection():
    assert ecc(_mat(0, 0.1, 0.1, 0)).rho_e[0] == 0.0


def test_ecc_hand_value():
    # |0.5*0.3 + 0.5*0.3|^2 / |(1-0.25-0.09)^2| = 0.09 / 0.4356
    assert ecc(_mat(0.5, 0.3, 0.3, 0.5)).rho_e[0] == pytest.approx(0.09 / 0.4356, rel=1e-14)
    assert ecc(_mat(0.5, 0.3, 0.3, 0.5)).rho_e[0] == pytest.approx(0.2066, abs=1e-4)


def test_ecc_singular():
    with pytest.raises(SingularEccError):
        ecc(_mat(1.0, 0, 0, 0.5))


cplx = st.builds(lambda r, p: r * np.exp(1j * p), st.floats(0, 0.69), st.floats(-np.pi, np.pi))


@settings(max_examples=60)
@given(cplx, cplx, cplx, cplx, st.floats(-np.pi, np.pi))
def test_ecc_swap_and_phase_invariance(a, b, c, d, ph):
    base = ecc(_mat(a, b, c, d)).rho_e[0]
    swapped = ecc(_mat(d, c, b, a)).rho_e[0]
    u = np.exp(1j * ph)
    rotated = ecc(_mat(a * u, b * u, c * u, d * u)).rho_e[0]
    assert swapped == pytest.approx(base, rel=1e-9, abs=1e-15)
    assert rotated == pytest.approx(base, rel=1e-9, abs=1e-15)


# -- bands ------------------------------------------------------------------------

def test_no_matched_band_at_minus_6db():
    f = np.linspace(2e9, 7e9, 11)
    s = np.zeros((11, 2, 2), complex)
    s[:, 0, 0] = s[:, 1, 1] = 0.5
    s[:, 1, 0] = s[:, 0, 1] = 0.1
    rep = band_report(SParamMatrix(f, s), (2e9, 7e9))
    assert rep.matched == []
    assert rep.min_isolation_db == pytest.approx(20.0)
    assert rep.max_ecc_matched is None


def test_interpolated_crossings():
    f = np.array([1.0, 2.0, 3.0, 4.0, 5.0]) * 1e9
    y = np.array([-5.0, -15.0, -12.0, -8.0, -20.0])
    got = matched_intervals(f, y, -10.0)
    # -5 -> -15 crosses at 1.5; -12 -> -8 at 3.5; -8 -> -20 at 4 + 2/12
    assert got[0] == pytest.approx((1.5e9, 3.5e9))
    assert got[1] == pytest.approx((4e9 + 2e9 / 12, 5e9))


def test_band_report_empty_band():
    f = np.linspace(2e9, 7e9, 11)
    with pytest.raises(ValueError):
        band_report(SParamMatrix(f, np.zeros((11, 2, 2))), (8e9, 9e9))


def test_dip_frequency_parabolic():
    f = np.linspace(2e9, 3e9, 101)
    mag = 0.05 + ((f - 2.513e9) / 0.3e9) ** 2
    s = np.zeros((101, 1, 1), complex)
    s[:, 0, 0] = mag
    got = dip_frequency(SParamMatrix(f, s), 2.4e9, 3.0e9)
    assert got == pytest.approx(2.513e9, abs=2e6)


# -- touchstone ----------------------------------------------------------------------

def _random_matrix(rng, n=41):
    f = np.linspace(2e9, 7e9, n)
    s = (rng.normal(size=(n, 2, 2)) + 1j * rng.normal(size=(n, 2, 2))) * 0.3
    return SParamMatrix(f, s)


def test_s2p_header_and_columns(tmp_path, rng):
    m = _random_matrix(rng)
    p = tmp_path / "a.s2p"
    write_s2p(p, m)
    lines = p.read_text().splitlines()
    assert lines[0] == "# GHz S RI R 50"
    assert all(len(ln.split()) == 9 for ln in lines[1:])
    back = read_s2p(p)
    assert np.array_equal(back.s, m.s)


def test_s2p_independent_reader(tmp_path, rng):
    skrf = pytest.importorskip("skrf")
    m = _random_matrix(rng)
    p = tmp_path / "b.s2p"
    write_s2p(p, m)
    net = skrf.Network(str(p))
    assert np.array_equal(net.s, m.s)
    assert np.allclose(net.f, m.freqs, rtol=0, atol=1e-3)
    assert float(np.real(net.z0[0, 0])) == 50.0


def test_s2p_deterministic(tmp_path, rng):
    m = _random_matrix(rng)
    write_s2p(tmp_path / "1.s2p", m)
    write_s2p(tmp_path / "2.s2p", m)
    assert (tmp_path / "1.s2p").read_bytes() == (tmp_path / "2.s2p").read_bytes()


# -- surface current ------------------------------------------------------------------

def test_current_jump_hand_value():
    # line current along y: Hx jumps by +K across the sheet, so Jy = K
    nx, ny = 4, 3
    dhx = np.zeros((nx + 1, ny))
    dhy = np.zeros((nx, ny + 1))
    dhx[2, :] = 5.0
    fx = np.ones((nx, ny + 1), bool)
    fy = np.ones((nx + 1, ny), bool)
    jx, jy = current_from_jump(dhx, dhy, fx, fy)
    assert np.allclose(jx, 0)
    assert np.allclose(jy[1], 2.5) and np.allclose(jy[2], 2.5)
    # a jump in Hy gives Jx = -dHy
    dhy[:, 1] = 3.0
    jx, _ = current_from_jump(dhx, dhy, fx, fy)
    assert np.allclose(jx[:, 0], -1.5) and np.allclose(jx[:, 1], -1.5)


def test_current_masked_without_metal():
    dhx = np.ones((5, 3))
    dhy = np.ones((4, 4))
    jx, jy = current_from_jump(dhx, dhy, np.zeros((4, 4), bool), np.zeros((5, 3), bool))
    assert not jx.any() and not jy.any()


# -- ring-down ------------------------------------------------------------------------

def test_ringdown_recovers_two_modes():
    from planar_em.postproc import dominant_mode, natural_modes
    dt, n = 3e-13, 20000
    t = np.arange(n) * dt
    x = np.exp(-3e7 * t) * np.cos(2 * np.pi * 2.8e9 * t + 0.3)
    x += 0.2 * np.exp(-2e8 * t) * np.sin(2 * np.pi * 5.1e9 * t)
    x += 1e-4 * np.random.default_rng(1).normal(size=n)
    modes = natural_modes(x, dt, order=8, decimate=20)
    assert modes[0].freq == pytest.approx(2.8e9, rel=1e-5)
    assert modes[0].q == pytest.approx(np.pi * 2.8e9 / 3e7, rel=1e-2)
    assert modes[1].freq == pytest.approx(5.1e9, rel=1e-4)
    assert dominant_mode(x, dt, band=(4e9, 6e9), decimate=20).freq == pytest.approx(5.1e9, rel=1e-4)


def test_fundamental_mode_prefers_lowest_significant():
    from planar_em.postproc import fundamental_mode
    dt, n = 3e-13, 20000
    t = np.arange(n) * dt
    x = 0.2 * np.exp(-3e7 * t) * np.cos(2 * np.pi * 2.8e9 * t)
    x += np.exp(-2e8 * t) * np.sin(2 * np.pi * 4.4e9 * t)
    assert fundamental_mode(x, dt, decimate=20, order=8).freq == pytest.approx(2.8e9, rel=1e-5)


def test_ringdown_short_record_rejected():
    from planar_em.postproc import natural_modes
    with pytest.raises(ValueError):
        natural_modes(np.ones(10), 1e-12, order=8)
