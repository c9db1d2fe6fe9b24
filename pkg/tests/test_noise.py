import numpy as np
import pytest
from scipy.optimize import curve_fit

from spinnoise.detection import ellipticity_observable, faraday_observable
from spinnoise.hamiltonian import SimParams, power_to_rabi
from spinnoise.lightshift import exact_eigenfrequencies, magic_angle
from spinnoise.master import (
    Liouvillian,
    SteadyStateError,
    build_liouvillian,
    steady_state,
    unpolarized_ground,
    vec,
)
from spinnoise.noise import (
    NoPeakError,
    Spectrum,
    injection_ensemble,
    resolvent_spectrum,
    simulate_signals,
    smooth,
    source_covariance,
    spectrum_peak_positions,
    stochastic_spectrum,
    trajectory_rng,
    welch_nperseg,
    welch_psd,
)
from spinnoise.operators import basis_rotation_z_to_x, build_operator_set
from spinnoise.specfit import fit_dual_peak, lorentzian

WIDE = (1.6e6, 4.6e6, 3001)
P3 = SimParams(rabi_hz=power_to_rabi(3.0), freq_grid=WIDE)


def mirrored_asymmetry(s: Spectrum, center: float, level: float = 0.1) -> float:
    mirror = np.interp(2 * center - s.freqs_hz, s.freqs_hz, s.psd)
    keep = s.psd >= level * s.psd.max()
    return float(np.max(np.abs(s.psd[keep] - mirror[keep]) / s.psd[keep]))


# -- resolvent ---------------------------------------------------------------

def test_bare_line_is_lorentzian_at_larmor():
    p = SimParams(rabi_hz=0.0)
    s = resolvent_spectrum(p, faraday_observable())
    (c, w, a), _ = curve_fit(lambda f, c, w, a: a * lorentzian(f, c, w), s.freqs_hz, s.psd,
                             p0=[3.1e6, 80e3, s.psd.max()])
    assert c == pytest.approx(3.1e6, abs=s.bin_hz)
    assert w / 2 == pytest.approx(p.transit_hz, rel=0.02)
    assert spectrum_peak_positions(s) == pytest.approx([3.1e6], abs=s.bin_hz)


def test_dual_peaks_at_3mw():
    s = resolvent_spectrum(P3, faraday_observable())
    peaks = spectrum_peak_positions(s)
    assert len(peaks) == 2
    lo, hi = sorted(peaks)
    assert (3.1e6 - lo) == pytest.approx(hi - 3.1e6, rel=0.03)
    ef = exact_eigenfrequencies(P3)
    assert hi - lo == pytest.approx(ef.splitting_hz, rel=0.05)


def test_single_peak_at_magic_angle():
    s = resolvent_spectrum(SimParams(theta_deg=magic_angle()), faraday_observable())
    assert len(spectrum_peak_positions(s)) == 1


def test_symmetry_random_injection():
    s = resolvent_spectrum(P3, faraday_observable(), injection="random")
    assert mirrored_asymmetry(s, P3.larmor_hz) < 0.03


def test_symmetry_default_z_injection():
    # z-basis injection adds a dispersive admixture of relative order transit/larmor
    s = resolvent_spectrum(P3, faraday_observable(), injection="z")
    assert mirrored_asymmetry(s, P3.larmor_hz) < 0.03


def test_injection_modes_share_peak_positions():
    # same standard as method equivalence: two bins of the default grid
    p = SimParams(rabi_hz=power_to_rabi(3.0))
    z = spectrum_peak_positions(resolvent_spectrum(p, faraday_observable(), injection="z"))
    r = spectrum_peak_positions(resolvent_spectrum(p, faraday_observable(), injection="random"))
    bin_hz = np.diff(p.frequencies())[0]
    np.testing.assert_allclose(sorted(z), sorted(r), atol=2 * bin_hz)


def test_larmor_translation():
    seps = []
    for nu in (2e6, 3.1e6, 5e6):
        p = P3.replace(larmor_hz=nu, freq_grid=(nu - 1.5e6, nu + 1.5e6, 3001))
        lo, hi = sorted(spectrum_peak_positions(resolvent_spectrum(p, faraday_observable())))
        seps.append(hi - lo)
    assert np.ptp(seps) / np.mean(seps) < 0.01


def test_psd_scales_inversely_with_atom_number():
    a = resolvent_spectrum(SimParams(), faraday_observable())
    b = resolvent_spectrum(SimParams(n_atoms=2e4), faraday_observable())
    np.testing.assert_allclose(b.psd, a.psd / 2, rtol=1e-9, atol=1e-12 * a.psd.max())


def test_ellipticity_double_larmor_weight():
    p = SimParams(rabi_hz=0.0, freq_grid=(0.5e6, 7e6, 6501))
    ell = resolvent_spectrum(p, ellipticity_observable(0.0))
    rot = resolvent_spectrum(p, faraday_observable())
    r_ell = ell.value_at(2 * p.larmor_hz) / ell.value_at(p.larmor_hz)
    r_rot = rot.value_at(2 * p.larmor_hz) / rot.value_at(p.larmor_hz)
    assert r_ell >= 10 * r_rot


@pytest.mark.parametrize("injection", ["z", "random"])
def test_basis_phase_convention_does_not_change_spectrum(injection):
    rephased = basis_rotation_z_to_x() @ np.diag(np.exp(1j * np.array([0.3, -1.1, 2.0])))
    ops = build_operator_set(rephased)
    p = SimParams(theta_deg=25.0)
    ref = resolvent_spectrum(p, faraday_observable(), injection=injection)
    alt = resolvent_spectrum(p, faraday_observable(ops), injection=injection, ops=ops)
    np.testing.assert_allclose(alt.psd, ref.psd, rtol=1e-8, atol=1e-10 * ref.psd.max())


def test_singular_resolvent_reported():
    liou = build_liouvillian(SimParams())
    frozen = Liouvillian(liou.coherent, np.zeros(16), liou.coherent, 0.0)
    with pytest.raises((SteadyStateError, np.linalg.LinAlgError)):
        resolvent_spectrum(SimParams(), faraday_observable(), liou=frozen)


def test_source_covariance_is_hermitian_psd():
    for mode in ("z", "random"):
        states, probs = injection_ensemble(mode)
        assert probs.sum() == pytest.approx(1.0)
        q = source_covariance(SimParams(), steady_state(build_liouvillian(SimParams())), mode)
        np.testing.assert_allclose(q, q.conj().T, atol=1e-15)
        assert np.linalg.eigvalsh(q).min() > -1e-12 * np.abs(q).max()


def test_random_ensemble_mean_is_unpolarized():
    states, probs = injection_ensemble("random")
    np.testing.assert_allclose(probs @ states, vec(unpolarized_ground()), atol=1e-12)


# -- spectrum container and peaks --------------------------------------------

def test_spectrum_validation():
    with pytest.raises(ValueError):
        Spectrum([1.0, 1.0], [1.0, 2.0], "x", 1.0)
    with pytest.raises(ValueError):
        Spectrum([1.0, 2.0], [1.0, -2.0], "x", 1.0)
    with pytest.raises(ValueError):
        Spectrum([1.0, 2.0], [1.0, 2.0], "x", 0.0)


def test_peak_of_single_lorentzian():
    f = np.linspace(2e6, 4e6, 2001)
    s = Spectrum(f, lorentzian(f, 3.1e6 + 123.0, 80e3), "synthetic", 1e3)
    assert spectrum_peak_positions(s) == pytest.approx([3.1e6 + 123.0], abs=s.bin_hz / 2)


def test_peaks_of_dual_spectrum_symmetric():
    f = np.linspace(2e6, 4e6, 2001)
    s = Spectrum(f, lorentzian(f, 2.83e6, 120e3) + lorentzian(f, 3.37e6, 120e3), "synthetic", 1e3)
    lo, hi = sorted(spectrum_peak_positions(s))
    assert (3.1e6 - lo) == pytest.approx(hi - 3.1e6, rel=0.05)


def test_flat_spectrum_has_no_peak():
    f = np.linspace(2e6, 4e6, 101)
    with pytest.raises(NoPeakError):
        spectrum_peak_positions(Spectrum(f, np.ones_like(f), "flat", 1e3))
    with pytest.raises(NoPeakError):
        spectrum_peak_positions(Spectrum(f, np.zeros_like(f), "flat", 1e3))


def test_smoothing_keeps_area():
    f = np.linspace(2e6, 4e6, 2001)
    s = Spectrum(f, lorentzian(f, 3.1e6, 40e3), "synthetic", 1e3)
    sm = smooth(s, 20e3)
    assert np.trapezoid(sm.psd, f) == pytest.approx(np.trapezoid(s.psd, f), rel=1e-3)
    assert sm.rbw_hz == 20e3


# -- stochastic --------------------------------------------------------------

def test_rng_streams_are_distinct_and_reproducible():
    a = trajectory_rng(3, 0).random(4)
    assert np.array_equal(a, trajectory_rng(3, 0).random(4))
    assert not np.array_equal(a, trajectory_rng(3, 1).random(4))
    assert not np.array_equal(a, trajectory_rng(4, 0).random(4))


def test_welch_bin_resolves_transit_width():
    p = SimParams()
    assert (1 / p.time_step_s) / welch_nperseg(p) <= p.transit_hz / 5


@pytest.mark.parametrize("changes", [dict(duration_s=1e-4), dict(time_step_s=2e-7)])
def test_inconsistent_sampling_rejected(changes):
    with pytest.raises(ValueError):
        stochastic_spectrum(SimParams(**changes), faraday_observable())


def test_unknown_injection_mode():
    with pytest.raises(ValueError):
        simulate_signals(SimParams(), faraday_observable(), injection="diagonal")


def test_stochastic_deterministic():
    p = SimParams(n_trajectories=4)
    a = stochastic_spectrum(p, faraday_observable())
    b = stochastic_spectrum(p, faraday_observable())
    assert np.array_equal(a.psd, b.psd)
    c = stochastic_spectrum(p.replace(rng_seed=1), faraday_observable())
    assert not np.array_equal(a.psd, c.psd)


def test_stochastic_bare_peak_matches_resolvent():
    p = SimParams(rabi_hz=0.0)
    st = stochastic_spectrum(p, faraday_observable())
    rs = resolvent_spectrum(p, faraday_observable())
    fit = fit_dual_peak(st, "two_lorentzians")
    assert fit.single_peak
    assert fit.peaks_hz[0] == pytest.approx(spectrum_peak_positions(rs)[0], abs=st.bin_hz)


def test_stochastic_split_matches_resolvent():
    st = stochastic_spectrum(P3, faraday_observable())
    rs = resolvent_spectrum(P3, faraday_observable())
    a = fit_dual_peak(st, "two_lorentzians").splitting_hz
    b = fit_dual_peak(rs, "two_lorentzians").splitting_hz
    assert abs(a - b) <= max(2 * st.bin_hz, 0.05 * b)


def test_parseval():
    p = SimParams(n_trajectories=8)
    x = simulate_signals(p, faraday_observable())
    f, pxx, _ = welch_psd(x, p)
    integrated = np.trapezoid(pxx.mean(axis=0), f)
    assert integrated == pytest.approx(np.mean(np.var(x, axis=1)), rel=0.05)


def test_stochastic_halves_with_doubled_atoms():
    p = SimParams(n_trajectories=16)
    a = stochastic_spectrum(p, faraday_observable())
    b = stochastic_spectrum(p.replace(n_atoms=2e4), faraday_observable())
    assert np.trapezoid(b.psd, b.freqs_hz) / np.trapezoid(a.psd, a.freqs_hz) == pytest.approx(0.5, rel=0.1)
