"""Polarimetric observables: Faraday rotation and ellipticity channels.

Detection is reduced to expectation values of ground-manifold operators
times a calibration constant (thin-cell limit of a balanced polarimeter).
All matrices are written in the x-quantized working basis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .operators import OperatorSet, build_operator_set, embed_ground


@dataclass(frozen=True)
class Observable:
    matrix: np.ndarray
    label: str
    scale: float = 1.0

    def __post_init__(self):
        a = self.matrix
        if np.abs(a - a.conj().T).max() > 1e-12:
            raise ValueError("observable must be Hermitian")
        if np.abs(a[3, :]).max() > 0 or np.abs(a[:, 3]).max() > 0:
            raise ValueError("observable must be supported on the ground manifold")

    def weights(self) -> np.ndarray:
        """Row vector a with signal = scale * a @ vec(rho) (column stacking)."""
        return self.scale * self.matrix.T.reshape(-1, order="F")


def faraday_observable(ops: OperatorSet | None = None, scale: float = 1.0) -> Observable:
    """Jz (probe axis) in the x basis: pop(|+1>_z) - pop(|-1>_z)."""
    ops = ops or build_operator_set()
    return Observable(embed_ground(ops.to_x_basis(ops.jz)), "rotation", scale)


def ellipticity_observable(theta_deg: float, ops: OperatorSet | None = None, scale: float = 1.0) -> Observable:
    """Alignment component {J_a, J_b} with a, b at +-45 deg to the probe polarization.

    The axes a and b lie in the transverse (x, y) plane. A precessing
    alignment shows up at both nu_L and 2 nu_L in this channel.
    """
    ops = ops or build_operator_set()
    t = np.deg2rad(theta_deg)
    a, b = t + np.pi / 4, t - np.pi / 4
    ja = np.cos(a) * ops.jx + np.sin(a) * ops.jy
    jb = np.cos(b) * ops.jx + np.sin(b) * ops.jy
    return Observable(embed_ground(ops.to_x_basis(ja @ jb + jb @ ja)), "ellipticity", scale)


def signal(rho: np.ndarray, obs: Observable) -> float:
    """kappa * tr(A rho) for one density matrix (or a stack of them)."""
    rho = np.asarray(rho)
    if np.abs(rho - np.swapaxes(rho.conj(), -1, -2)).max() > 1e-10:
        raise ValueError("density matrix is not Hermitian")
    value = obs.scale * np.einsum("ij,...ji->...", obs.matrix, rho)
    if np.abs(value.imag).max() > 1e-10:
        raise ValueError("signal has a non-negligible imaginary part")
    out = value.real
    return float(out) if out.ndim == 0 else out
