"""Spin-1 angular momentum algebra and dipole couplings for a J=1 -> J'=0 line.

Basis ordering is fixed everywhere as (|+1>, |0>, |-1>) for the ground
manifold, followed by the excited state |e> when a 4-level space is needed.
Matrices returned by :func:`spin1_matrices` are written in the z-quantized
basis; the working basis of the simulator is the x-quantized one (field axis),
reached with :func:`basis_rotation_z_to_x`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

GROUND_DIM = 3
FULL_DIM = 4
EXCITED = 3

# Cartesian components of the spherical z-basis states (Condon-Shortley):
# |+1> = -(|x> + i|y>)/sqrt2, |0> = |z>, |-1> = (|x> - i|y>)/sqrt2.
_S2 = np.sqrt(2.0)
CARTESIAN_FROM_Z = np.array(
    [
        [-1 / _S2, 0.0, 1 / _S2],
        [-1j / _S2, 0.0, -1j / _S2],
        [0.0, 1.0, 0.0],
    ],
    dtype=complex,
)


@dataclass(frozen=True)
class OperatorSet:
    """Spin-1 operators (z basis), the z->x rotation and the dipole blocks.

    The coupling blocks ``v_pi``, ``v_sigma_plus`` and ``v_sigma_minus`` are
    1x3 rows in the x-quantized ground basis, each carrying the Clebsch-Gordan
    amplitude 1/sqrt(3) of its transition.
    """

    jx: np.ndarray
    jy: np.ndarray
    jz: np.ndarray
    rot_z_to_x: np.ndarray | None = None
    v_pi: np.ndarray | None = None
    v_sigma_plus: np.ndarray | None = None
    v_sigma_minus: np.ndarray | None = None

    def to_x_basis(self, op: np.ndarray) -> np.ndarray:
        """Express a z-basis ground operator in the x-quantized basis."""
        u = self.rot_z_to_x if self.rot_z_to_x is not None else basis_rotation_z_to_x()
        return u.conj().T @ op @ u


def spin1_matrices() -> OperatorSet:
    """Standard spin-1 matrices in the z basis {|+1>, |0>, |-1>} (units of hbar)."""
    jp = np.zeros((3, 3), dtype=complex)
    jp[0, 1] = jp[1, 2] = _S2
    jm = jp.conj().T
    jx = (jp + jm) / 2
    jy = (jp - jm) / 2j
    jz = np.diag([1.0, 0.0, -1.0]).astype(complex)
    return OperatorSet(jx=jx, jy=jy, jz=jz)


def basis_rotation_z_to_x() -> np.ndarray:
    """Unitary whose columns are the states |m>_x written in the z basis.

    This is the spin-1 rotation by pi about (x + z)/sqrt2, which swaps the x
    and z axes, so that both ``U^dag jz U = jx`` and ``U^dag jx U = jz`` hold.
    Written in closed form (equal to ``expm(-i pi (jx + jz)/sqrt2)``) so that
    zero entries are exact.
    """
    h = 1 / _S2
    return np.array(
        [
            [-0.5, -h, -0.5],
            [-h, 0.0, h],
            [-0.5, h, -0.5],
        ],
        dtype=complex,
    )


def _dipole_rows(rot: np.ndarray) -> np.ndarray:
    """Cartesian dipole components <e|d_k|m>_x as a 3x3 array (k, m)."""
    return (CARTESIAN_FROM_Z @ rot) / np.sqrt(3.0)


def polarization_vector(theta_deg: float) -> np.ndarray:
    """Linear polarization in the transverse (x, y) plane, angle from x."""
    t = np.deg2rad(theta_deg)
    return np.array([np.cos(t), np.sin(t), 0.0])


def coupling_operator(theta_deg: float, rot: np.ndarray | None = None) -> np.ndarray:
    """Ground->excited coupling row V(theta) in the x-quantized ground basis.

    Amplitudes are in units of the total Rabi frequency: the pi component
    (|0>_x) carries cos(theta)/sqrt3, the sigma components (|+-1>_x) carry
    sin(theta)/sqrt6 each, so that sum |V_i|^2 = 1/3 for any angle.

    Parameters
    ----------
    theta_deg : float
        Angle between the probe polarization and the magnetic field (x).
    rot : ndarray, optional
        z->x basis rotation; defaults to :func:`basis_rotation_z_to_x`.
        Passing a rephased rotation changes intermediate matrices only.
    """
    if not 0.0 <= theta_deg <= 360.0:
        raise ValueError(f"theta_deg must lie in [0, 360], got {theta_deg}")
    if rot is None:
        rot = basis_rotation_z_to_x()
    eps = polarization_vector(theta_deg)
    return (eps @ _dipole_rows(rot)).reshape(1, 3)


def transition_weights(theta_deg: float) -> tuple[float, float, float]:
    """Squared amplitudes (|a_pi|^2, |a_sigma+|^2, |a_sigma-|^2).

    sigma+ is the Delta m = +1 absorption, i.e. it starts from |-1>_x.
    """
    v = np.abs(coupling_operator(theta_deg).ravel()) ** 2
    return float(v[1]), float(v[2]), float(v[0])


def build_operator_set(rot: np.ndarray | None = None) -> OperatorSet:
    """Full :class:`OperatorSet` including rotation and unit dipole blocks."""
    s = spin1_matrices()
    if rot is None:
        rot = basis_rotation_z_to_x()
    rows = _dipole_rows(rot)
    # spherical components about x: e_0 = x, e_{+-1} = -+(y +- i z)/sqrt2
    e_pi = np.array([1.0, 0.0, 0.0])
    e_p = -np.array([0.0, 1.0, 1j]) / _S2
    e_m = np.array([0.0, 1.0, -1j]) / _S2
    return OperatorSet(
        jx=s.jx,
        jy=s.jy,
        jz=s.jz,
        rot_z_to_x=rot,
        v_pi=(e_pi @ rows).reshape(1, 3),
        v_sigma_plus=(e_p @ rows).reshape(1, 3),
        v_sigma_minus=(e_m @ rows).reshape(1, 3),
    )


def embed_ground(op: np.ndarray) -> np.ndarray:
    """Extend a 3x3 ground operator by a zero excited row/column."""
    out = np.zeros((FULL_DIM, FULL_DIM), dtype=complex)
    out[:GROUND_DIM, :GROUND_DIM] = op
    return out


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a
