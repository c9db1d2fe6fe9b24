import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spinnoise.detection import Observable, ellipticity_observable, faraday_observable, signal
from spinnoise.hamiltonian import TWO_PI, SimParams
from spinnoise.master import build_liouvillian, exact_step, unpolarized_ground, vec
from spinnoise.operators import build_operator_set, embed_ground


def z_state(m_index: int) -> np.ndarray:
    """|m>_z<m|_z embedded in the x working basis."""
    u = build_operator_set().rot_z_to_x
    proj = np.zeros((3, 3), dtype=complex)
    proj[m_index, m_index] = 1.0
    return embed_ground(u.conj().T @ proj @ u)


def random_ground_density(rng):
    a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    r = a @ a.conj().T
    return embed_ground(r / np.trace(r))


def free_signal(rho0, obs, larmor=1e6, n=4096, dt=2e-8):
    p = SimParams(rabi_hz=0.0, larmor_hz=larmor, transit_hz=2e3, detuning_hz=10e6)
    prop, _ = exact_step(build_liouvillian(p).matrix, np.zeros(16, dtype=complex), dt)
    y, a, out = vec(rho0), obs.weights(), np.empty(n)
    for k in range(n):
        out[k] = (a @ y).real
        y = prop @ y
    return np.arange(n) * dt, out, p


@pytest.mark.parametrize("obs", [faraday_observable(), ellipticity_observable(0.0), ellipticity_observable(30.0)])
def test_unpolarized_gives_zero(obs):
    assert signal(unpolarized_ground(), obs) == pytest.approx(0.0, abs=1e-14)


def test_faraday_of_z_states():
    obs = faraday_observable(scale=2.5)
    assert signal(z_state(0), obs) == pytest.approx(2.5)
    assert signal(z_state(2), obs) == pytest.approx(-2.5)
    assert signal(z_state(1), obs) == pytest.approx(0.0, abs=1e-14)


def test_free_precession_closed_form():
    t, sig, p = free_signal(z_state(0), faraday_observable())
    expected = np.cos(TWO_PI * p.larmor_hz * t) * np.exp(-TWO_PI * p.transit_hz * t)
    np.testing.assert_allclose(sig, expected, atol=1e-10)


def test_aligned_state_shows_larmor_and_double_larmor():
    # alignment along an axis tilted away from both the field and the transverse plane
    n = np.array([np.cos(np.pi / 4), np.sin(np.pi / 4) * np.cos(np.pi / 6), np.sin(np.pi / 4) * np.sin(np.pi / 6)])
    ops = build_operator_set()
    nj = sum(c * ops.to_x_basis(j) for c, j in zip(n, (ops.jx, ops.jy, ops.jz)))
    rho0 = embed_ground(np.eye(3) - nj @ nj)  # |0>_n<0|_n
    t, sig, p = free_signal(rho0, ellipticity_observable(0.0))
    spec = np.abs(np.fft.rfft((sig - sig.mean()) * np.hanning(len(sig))))
    f = np.fft.rfftfreq(len(sig), t[1])
    floor = np.median(spec)
    for line in (p.larmor_hz, 2 * p.larmor_hz):
        assert spec[np.argmin(np.abs(f - line))] > 100 * floor
    # the rotation channel sees neither line for a pure alignment
    _, rot, _ = free_signal(rho0, faraday_observable())
    assert np.abs(rot).max() < 1e-12


def test_rotation_blind_to_balanced_z_diagonal_states():
    rho = 0.3 * z_state(0) + 0.4 * z_state(1) + 0.3 * z_state(2)
    assert signal(rho, faraday_observable()) == pytest.approx(0.0, abs=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), st.floats(0.0, 1.0))
def test_linearity(seed, alpha):
    rng = np.random.default_rng(seed)
    r1, r2 = random_ground_density(rng), random_ground_density(rng)
    for obs in (faraday_observable(), ellipticity_observable(17.0)):
        lhs = signal(alpha * r1 + (1 - alpha) * r2, obs)
        assert lhs == pytest.approx(alpha * signal(r1, obs) + (1 - alpha) * signal(r2, obs), abs=1e-12)


def test_basis_consistency():
    rng = np.random.default_rng(5)
    ops = build_operator_set()
    u = ops.rot_z_to_x
    for _ in range(10):
        rho_x = random_ground_density(rng)
        rho_z = u @ rho_x[:3, :3] @ u.conj().T
        assert signal(rho_x, faraday_observable()) == pytest.approx(np.trace(ops.jz @ rho_z).real, abs=1e-12)


def test_weights_match_trace():
    rho = random_ground_density(np.random.default_rng(9))
    obs = ellipticity_observable(10.0, scale=3.0)
    assert (obs.weights() @ vec(rho)).real == pytest.approx(signal(rho, obs), abs=1e-12)


def test_validation():
    with pytest.raises(ValueError):
        Observable(np.triu(np.ones((4, 4))), "bad")
    m = np.zeros((4, 4))
    m[3, 3] = 1.0
    with pytest.raises(ValueError):
        Observable(m, "excited")
    with pytest.raises(ValueError):
        signal(np.triu(np.ones((4, 4))), faraday_observable())


def test_stacked_signals():
    rng = np.random.default_rng(4)
    stack = np.stack([random_ground_density(rng) for _ in range(3)])
    out = signal(stack, faraday_observable())
    assert out.shape == (3,)
