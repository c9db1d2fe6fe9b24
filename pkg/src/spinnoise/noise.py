"""Spin-noise power spectra by two independent routes.

``resolvent_spectrum`` evaluates the stationary correlator of the transit
noise in closed form: the injection ensemble gives a white source covariance,
a Lyapunov equation gives the equal-time covariance of rho, and the
regression theorem turns it into a spectrum through (i omega - L)^-1.

``stochastic_spectrum`` simulates the ensemble-averaged density matrix of
``n_atoms`` atoms with Poisson injection of single atoms in pure states and
estimates the spectrum with averaged Welch periodograms.

Both return one-sided PSDs (signal units^2 / Hz) on positive frequencies.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import signal as sp_signal
from scipy.linalg import solve_continuous_lyapunov

from .detection import Observable
from .hamiltonian import TWO_PI, SimParams, build_hamiltonian
from .master import Liouvillian, build_liouvillian, exact_step, steady_state, vec
from .operators import FULL_DIM, GROUND_DIM, OperatorSet, build_operator_set, embed_ground

HANN_ENBW = 1.5
INJECTION_MODES = ("z", "random")


class NoPeakError(ValueError):
    pass


@dataclass
class Spectrum:
    freqs_hz: np.ndarray
    psd: np.ndarray
    method: str
    rbw_hz: float
    n_averages: int = 1
    channel: str = "rotation"
    params: SimParams | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.freqs_hz = np.asarray(self.freqs_hz, dtype=float)
        self.psd = np.asarray(self.psd, dtype=float)
        if self.freqs_hz.shape != self.psd.shape:
            raise ValueError("freqs_hz and psd must have the same shape")
        if np.any(np.diff(self.freqs_hz) <= 0):
            raise ValueError("frequency grid must be strictly increasing")
        if np.any(self.psd < 0):
            raise ValueError("PSD must be non-negative")
        if self.rbw_hz <= 0:
            raise ValueError("rbw_hz must be positive")

    @property
    def bin_hz(self) -> float:
        return float(np.median(np.diff(self.freqs_hz)))

    def value_at(self, freq_hz: float) -> float:
        return float(np.interp(freq_hz, self.freqs_hz, self.psd))


# -- injection ensembles ----------------------------------------------------

def _z_projectors(ops: OperatorSet | None = None) -> np.ndarray:
    """vec(|m>_z<m|_z) in the x working basis, rows m = +1, 0, -1."""
    ops = ops or build_operator_set()
    u = ops.rot_z_to_x
    rows = []
    for m in range(GROUND_DIM):
        proj = np.zeros((GROUND_DIM, GROUND_DIM), dtype=complex)
        proj[m, m] = 1.0
        rows.append(vec(embed_ground(u.conj().T @ proj @ u)))
    return np.array(rows)


def _spin_ops_x_basis(ops: OperatorSet | None = None) -> np.ndarray:
    ops = ops or build_operator_set()
    return np.array([ops.to_x_basis(j) for j in (ops.jx, ops.jy, ops.jz)])


def _axis_projectors(axes: np.ndarray, m: np.ndarray, ops: OperatorSet | None = None) -> np.ndarray:
    """vec(|m>_n<m|_n) for unit vectors n (rows of ``axes``), x working basis."""
    j = _spin_ops_x_basis(ops)
    nj = np.einsum("ka,aij->kij", axes, j)
    nj2 = nj @ nj
    eye = np.eye(GROUND_DIM)
    proj = np.where(
        (m == 0)[:, None, None], eye - nj2, 0.5 * (nj2 + m[:, None, None] * nj)
    )
    full = np.zeros((len(m), FULL_DIM, FULL_DIM), dtype=complex)
    full[:, :GROUND_DIM, :GROUND_DIM] = proj
    return full.transpose(0, 2, 1).reshape(len(m), -1)


def _sphere_quadrature(n_theta: int = 6, n_phi: int = 10) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre x uniform-phi rule, exact for low-degree polynomials on S^2."""
    x, w = np.polynomial.legendre.leggauss(n_theta)
    phi = np.arange(n_phi) * TWO_PI / n_phi
    ct, ph = np.meshgrid(x, phi, indexing="ij")
    st = np.sqrt(1 - ct**2)
    axes = np.stack([st * np.cos(ph), st * np.sin(ph), ct], axis=-1).reshape(-1, 3)
    weights = (w[:, None] * np.ones(n_phi)[None, :]).reshape(-1) / (2.0 * n_phi)
    return axes, weights


def injection_ensemble(injection: str = "z", ops: OperatorSet | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Pure states fed by transit, as (vec projectors, probabilities)."""
    if injection == "z":
        return _z_projectors(ops), np.full(GROUND_DIM, 1.0 / GROUND_DIM)
    if injection == "random":
        axes, w = _sphere_quadrature()
        ms = np.array([1, 0, -1])
        states = np.concatenate([_axis_projectors(axes, np.full(len(axes), m), ops) for m in ms])
        return states, np.concatenate([w / 3.0] * 3)
    raise ValueError(f"unknown injection mode {injection!r}; expected one of {INJECTION_MODES}")


def source_covariance(p: SimParams, rho_ss: np.ndarray, injection: str = "z",
                      ops: OperatorSet | None = None) -> np.ndarray:
    """White-noise intensity Q of the injection process, (gamma_t / N) E[(p - r)(p - r)^dag]."""
    states, probs = injection_ensemble(injection, ops)
    dev = states - vec(rho_ss)[None, :]
    second = np.einsum("k,ki,kj->ij", probs, dev, dev.conj())
    return TWO_PI * p.transit_hz / p.n_atoms * second


def stationary_covariance(liou: Liouvillian, q: np.ndarray) -> np.ndarray:
    """Solve L S + S L^dag + Q = 0."""
    return solve_continuous_lyapunov(liou.matrix, -q)


# -- resolvent route --------------------------------------------------------

def resolvent_spectrum(
    p: SimParams,
    obs: Observable,
    freqs: np.ndarray | None = None,
    injection: str = "z",
    liou: Liouvillian | None = None,
    ops: OperatorSet | None = None,
) -> Spectrum:
    """Deterministic PSD from the regression theorem.

    S(nu) = 2 Re a^T (i 2 pi nu - L)^-1 Sigma a*, summed over +-nu.
    ``ops`` fixes the basis phase convention for the generator and the
    injected states; ``obs`` must be built from the same set.
    """
    freqs = p.frequencies() if freqs is None else np.asarray(freqs, dtype=float)
    if liou is None:
        liou = build_liouvillian(p, build_hamiltonian(p, ops) if ops is not None else None)
    rho_ss = steady_state(liou)
    sigma = stationary_covariance(liou, source_covariance(p, rho_ss, injection, ops))
    a = obs.weights()
    c = sigma @ a.conj()
    n = FULL_DIM**2
    eye = np.eye(n)

    def two_sided(nu: np.ndarray) -> np.ndarray:
        mats = 1j * TWO_PI * nu[:, None, None] * eye[None] - liou.matrix[None]
        cond = np.linalg.cond(mats)
        if np.any(~np.isfinite(cond)) or cond.max() > 1e14:
            raise np.linalg.LinAlgError("resolvent is singular at a requested frequency")
        x = np.linalg.solve(mats, np.broadcast_to(c, (len(nu), n))[..., None])[..., 0]
        return 2.0 * np.real(x @ a)

    psd = two_sided(freqs) + two_sided(-freqs)
    psd = np.clip(psd, 0.0, None)
    rbw = float(np.median(np.diff(freqs))) if len(freqs) > 1 else 1.0
    return Spectrum(freqs, psd, "resolvent", rbw, 1, obs.label, p, {"injection": injection})


# -- stochastic route -------------------------------------------------------

def trajectory_rng(seed: int, index: int) -> np.random.Generator:
    """Counter-based stream keyed by (seed, trajectory index)."""
    return np.random.Generator(np.random.Philox(key=[int(seed), int(index)]))


def welch_nperseg(p: SimParams) -> int:
    """Smallest power of two giving a bin width <= transit_hz / 5."""
    fs = 1.0 / p.time_step_s
    need = fs / (p.transit_hz / 5.0)
    return int(2 ** np.ceil(np.log2(need)))


def _check_stochastic(p: SimParams) -> tuple[int, int, int]:
    if p.n_trajectories < 1:
        raise ValueError("n_trajectories must be >= 1")
    if p.n_atoms <= 0:
        raise ValueError("n_atoms (N_eff) must be positive")
    if p.time_step_s <= 0 or p.duration_s <= 0:
        raise ValueError("time_step_s and duration_s must be positive")
    gamma_t = TWO_PI * p.transit_hz
    if p.duration_s < 50.0 / gamma_t:
        raise ValueError(
            f"duration {p.duration_s:.3e} s shorter than 50 correlation times ({50.0 / gamma_t:.3e} s)"
        )
    fmax = p.frequencies()[-1]
    if 0.5 / p.time_step_s <= fmax:
        raise ValueError(f"sampling rate {1 / p.time_step_s:.3e} Hz does not cover {fmax:.3e} Hz")
    n_steps = int(round(p.duration_s / p.time_step_s))
    nperseg = welch_nperseg(p)
    if n_steps < nperseg:
        raise ValueError(f"duration holds {n_steps} samples, fewer than one Welch segment ({nperseg})")
    n_burn = int(np.ceil(10.0 / (gamma_t * p.time_step_s)))
    return n_steps, nperseg, n_burn


def _injection_chunk(rng: np.random.Generator, n: int, lam: float, injection: str,
                     z_states: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-step event counts and summed injected projectors for one trajectory."""
    if injection == "z":
        counts = rng.poisson(lam / 3.0, size=(n, 3))
        return counts.sum(axis=1), counts @ z_states
    k = rng.poisson(lam, size=n)
    total = int(k.sum())
    axes = rng.normal(size=(total, 3))
    axes /= np.linalg.norm(axes, axis=1, keepdims=True)
    m = rng.integers(-1, 2, size=total)
    states = _axis_projectors(axes, m)
    sums = np.zeros((n, FULL_DIM**2), dtype=complex)
    np.add.at(sums, np.repeat(np.arange(n), k), states)
    return k, sums


def simulate_signals(p: SimParams, obs: Observable, injection: str = "z", chunk: int = 4096) -> np.ndarray:
    """Signal records, shape (n_trajectories, n_steps), after a burn-in."""
    if injection not in INJECTION_MODES:
        raise ValueError(f"unknown injection mode {injection!r}")
    n_steps, _, n_burn = _check_stochastic(p)
    liou = build_liouvillian(p)
    prop, _ = exact_step(liou.coherent, np.zeros(FULL_DIM**2, dtype=complex), p.time_step_s)
    prop_t = prop.T.copy()
    a = obs.weights()
    z_states = _z_projectors()
    lam = TWO_PI * p.transit_hz * p.n_atoms * p.time_step_s
    keep = 1.0 - 1.0 / p.n_atoms

    n_traj = p.n_trajectories
    rngs = [trajectory_rng(p.rng_seed, i) for i in range(n_traj)]
    rho = np.tile(vec(steady_state(liou)), (n_traj, 1))
    total = n_burn + n_steps
    out = np.empty((n_traj, n_steps))
    done = 0
    while done < total:
        n = min(chunk, total - done)
        draws = [_injection_chunk(r, n, lam, injection, z_states) for r in rngs]
        k = np.stack([d[0] for d in draws], axis=1)  # (n, traj)
        inj = np.stack([d[1] for d in draws], axis=1)  # (n, traj, 16)
        f = keep ** k
        with np.errstate(invalid="ignore", divide="ignore"):
            w = np.where(k > 0, (1.0 - f) / np.maximum(k, 1), 0.0)
        for s in range(n):
            rho = rho @ prop_t
            rho *= f[s][:, None]
            rho += w[s][:, None] * inj[s]
            t = done + s - n_burn
            if t >= 0:
                out[:, t] = (rho @ a).real
        done += n
    return out


def welch_psd(x: np.ndarray, p: SimParams) -> tuple[np.ndarray, np.ndarray, int]:
    """Hann-windowed, 50%-overlap Welch PSD of each row; returns (f, psd rows, n_segments)."""
    nperseg = welch_nperseg(p)
    f, pxx = sp_signal.welch(
        x, fs=1.0 / p.time_step_s, window="hann", nperseg=nperseg, noverlap=nperseg // 2,
        detrend="constant", scaling="density", return_onesided=True, axis=-1,
    )
    n_seg = 1 + (x.shape[-1] - nperseg) // (nperseg - nperseg // 2)
    return f, pxx, n_seg


def stochastic_spectrum(p: SimParams, obs: Observable, injection: str = "z") -> Spectrum:
    """Monte Carlo PSD averaged over ``n_trajectories`` independent streams."""
    signals = simulate_signals(p, obs, injection)
    f, pxx, n_seg = welch_psd(signals, p)
    # fixed-order reduction over trajectory index
    psd = np.zeros_like(f)
    for row in pxx:
        psd += row
    psd /= len(pxx)
    grid = p.frequencies()
    band = (f >= grid[0]) & (f <= grid[-1])
    if band.sum() < 3:
        raise ValueError("frequency window holds fewer than 3 Welch bins")
    rbw = HANN_ENBW * (f[1] - f[0])
    return Spectrum(f[band], psd[band], "stochastic", rbw, n_seg * len(pxx), obs.label, p,
                    {"injection": injection, "signal_variance": float(np.mean(np.var(signals, axis=1)))})


# -- peaks ------------------------------------------------------------------

def smooth(s: Spectrum, rbw_hz: float) -> Spectrum:
    """Convolve with a Hann kernel whose equivalent noise bandwidth is ``rbw_hz``."""
    if rbw_hz <= s.bin_hz:
        return s
    n = max(3, int(round(rbw_hz / HANN_ENBW / s.bin_hz * 2)) | 1)
    kernel = np.hanning(n + 2)[1:-1]
    kernel /= kernel.sum()
    padded = np.pad(s.psd, n // 2, mode="edge")
    psd = np.convolve(padded, kernel, mode="valid")
    return Spectrum(s.freqs_hz, psd, s.method, max(rbw_hz, s.rbw_hz), s.n_averages, s.channel, s.params, dict(s.meta))


def spectrum_peak_positions(s: Spectrum, prominence: float = 0.1) -> list[float]:
    """Local maxima rising ``prominence`` x global max above their baseline.

    Positions are refined by a parabola through the log-PSD of the three
    bins around each maximum.
    """
    psd = s.psd
    top = psd.max()
    if top <= 0:
        raise NoPeakError("spectrum is identically zero")
    idx, _ = sp_signal.find_peaks(psd, prominence=prominence * top)
    if idx.size == 0:
        raise NoPeakError("no peak above the prominence threshold")
    out = []
    logp = np.log(np.clip(psd, top * 1e-300, None))
    for i in idx:
        if 0 < i < len(psd) - 1:
            y0, y1, y2 = logp[i - 1 : i + 2]
            denom = y0 - 2 * y1 + y2
            shift = 0.5 * (y0 - y2) / denom if denom < 0 else 0.0
            f0, f1 = s.freqs_hz[i], s.freqs_hz[i + 1] - s.freqs_hz[i]
            out.append(float(f0 + shift * f1))
        else:
            out.append(float(s.freqs_hz[i]))
    return out
