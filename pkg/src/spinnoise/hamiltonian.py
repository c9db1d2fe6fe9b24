"""Simulation parameters and the 4x4 rotating-frame Hamiltonian.

Frequencies are linear (Hz) at the API boundary; the Hamiltonian is returned
in angular units (rad/s). The frame rotates at the laser frequency so that a
blue detuning (``detuning_hz > 0``) puts the excited level at ``-Delta``.
"""

from __future__ import annotations

import dataclasses
import warnings
from dataclasses import dataclass

import numpy as np

from .operators import EXCITED, FULL_DIM, GROUND_DIM, OperatorSet, build_operator_set, coupling_operator

TWO_PI = 2.0 * np.pi
RABI_MHZ_AT_1MW = 40.0
DEFAULT_GAMMA_HZ = 1.6e6
DEFAULT_TRANSIT_HZ = 40e3


class PerturbativeRegimeWarning(UserWarning):
    """Detuning is not large compared with the Rabi frequency and linewidth."""


def power_to_rabi(power_mw: float, scale_mhz: float = RABI_MHZ_AT_1MW) -> float:
    """Total Rabi frequency Omega/2pi in Hz for a probe power in mW.

    Omega scales as sqrt(power); ``scale_mhz`` is the value at 1 mW.

    >>> round(power_to_rabi(1.0) / 1e6, 6)
    40.0
    """
    if power_mw < 0:
        raise ValueError(f"probe power must be non-negative, got {power_mw} mW")
    return scale_mhz * 1e6 * np.sqrt(power_mw)


@dataclass(frozen=True)
class SimParams:
    """All physical and numerical knobs of a simulation.

    If ``power_mw`` is given it takes precedence and ``rabi_hz`` is derived
    from it with :func:`power_to_rabi`.
    """

    rabi_hz: float = 70e6
    detuning_hz: float = 1.5e9
    theta_deg: float = 0.0
    larmor_hz: float = 3.1e6
    gamma_hz: float = DEFAULT_GAMMA_HZ
    transit_hz: float = DEFAULT_TRANSIT_HZ
    power_mw: float | None = None
    rng_seed: int = 0
    time_step_s: float = 5e-8
    duration_s: float = 2e-3
    n_trajectories: int = 32
    n_atoms: float = 1e4
    # (start_hz, stop_hz, n_points); None -> window centred on larmor_hz
    freq_grid: tuple[float, float, int] | None = None

    def __post_init__(self):
        if self.power_mw is not None:
            object.__setattr__(self, "rabi_hz", power_to_rabi(self.power_mw))
        if self.rabi_hz < 0:
            raise ValueError("rabi_hz must be >= 0")
        if self.gamma_hz <= 0:
            raise ValueError("gamma_hz must be > 0")
        if self.transit_hz <= 0:
            raise ValueError("transit_hz must be > 0")
        if self.time_step_s <= 0 or self.duration_s <= 0:
            raise ValueError("time_step_s and duration_s must be > 0")
        if self.n_atoms <= 0:
            raise ValueError("n_atoms must be > 0")
        if self.n_trajectories < 1:
            raise ValueError("n_trajectories must be >= 1")
        if self.larmor_hz < 0:
            raise ValueError("larmor_hz must be >= 0")
        if self.freq_grid is not None:
            object.__setattr__(self, "freq_grid", tuple(self.freq_grid))
        if self.rabi_hz > 0 and abs(self.detuning_hz) < 10 * max(self.rabi_hz, self.gamma_hz / 2):
            warnings.warn(
                f"|detuning| = {abs(self.detuning_hz):.3g} Hz is not >> Rabi ({self.rabi_hz:.3g} Hz) "
                f"and Gamma/2 ({self.gamma_hz / 2:.3g} Hz); second-order light-shift formulas lose accuracy",
                PerturbativeRegimeWarning,
                stacklevel=3,
            )

    def replace(self, **changes) -> SimParams:
        """Copy with some fields changed.

        Setting ``rabi_hz`` explicitly drops a previously given ``power_mw``.
        """
        if "rabi_hz" in changes and "power_mw" not in changes:
            changes["power_mw"] = None
        return dataclasses.replace(self, **changes)

    def frequencies(self) -> np.ndarray:
        """Spectral grid in Hz."""
        if self.freq_grid is not None:
            start, stop, n = self.freq_grid
            return np.linspace(start, stop, int(n))
        half = 1.5e6
        return np.linspace(max(self.larmor_hz - half, 0.0), self.larmor_hz + half, 1501)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def build_hamiltonian(p: SimParams, ops: OperatorSet | None = None) -> np.ndarray:
    """Rotating-frame Hamiltonian over (|+1>_x, |0>_x, |-1>_x, |e>), rad/s.

    H = 2pi nu_L (Jx + 0) - 2pi Delta |e><e| + (2pi Omega / 2)(V + V^dag)
    """
    rot = ops.rot_z_to_x if ops is not None else None
    v = coupling_operator(p.theta_deg % 360.0, rot=rot)
    h = np.zeros((FULL_DIM, FULL_DIM), dtype=complex)
    # Jx is diagonal in the x-quantized basis
    h[:GROUND_DIM, :GROUND_DIM] = TWO_PI * p.larmor_hz * np.diag([1.0, 0.0, -1.0])
    h[EXCITED, EXCITED] = -TWO_PI * p.detuning_hz
    coupling = np.zeros_like(h)
    coupling[EXCITED, :GROUND_DIM] = v.ravel()
    h += 0.5 * TWO_PI * p.rabi_hz * (coupling + coupling.conj().T)
    return h


def default_operators() -> OperatorSet:
    return build_operator_set()
