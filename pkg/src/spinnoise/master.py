"""Lindblad master equation with spontaneous emission and transit relaxation.

Density matrices are vectorized by column stacking (``order="F"``), so that
``vec(A X B) = (B^T kron A) vec(X)``. The generator is affine:
``d vec(rho)/dt = L vec(rho) + s`` with ``s = gamma_t vec(rho_0)`` feeding
fresh unpolarized atoms into the beam.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .hamiltonian import TWO_PI, SimParams, build_hamiltonian
from .operators import EXCITED, FULL_DIM, GROUND_DIM

STABILITY_FACTOR = 0.05


class SteadyStateError(RuntimeError):
    pass


class StepSizeError(ValueError):
    pass


def vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho).reshape(-1, order="F")


def unvec(v: np.ndarray, dim: int = FULL_DIM) -> np.ndarray:
    return np.asarray(v).reshape(dim, dim, order="F")


def unpolarized_ground() -> np.ndarray:
    """rho_0 = (1/3) sum_m |m><m| on the ground manifold."""
    rho = np.zeros((FULL_DIM, FULL_DIM), dtype=complex)
    rho[:GROUND_DIM, :GROUND_DIM] = np.eye(GROUND_DIM) / 3.0
    return rho


def check_density_matrix(rho: np.ndarray, atol: float = 1e-10, neg_tol: float = 1e-8) -> None:
    """Raise ValueError unless rho is Hermitian, unit-trace and positive."""
    if np.abs(rho - rho.conj().T).max() > atol:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1.0) > atol:
        raise ValueError(f"density matrix trace is {np.trace(rho).real:.12g}, expected 1")
    if np.linalg.eigvalsh((rho + rho.conj().T) / 2).min() < -neg_tol:
        raise ValueError("density matrix has negative eigenvalues")


def hamiltonian_superop(h: np.ndarray) -> np.ndarray:
    eye = np.eye(h.shape[0])
    return -1j * (np.kron(eye, h) - np.kron(h.T, eye))


def dissipator(c: np.ndarray) -> np.ndarray:
    """Superoperator of D[c] rho = c rho c^dag - {c^dag c, rho}/2."""
    eye = np.eye(c.shape[0])
    cdc = c.conj().T @ c
    return np.kron(c.conj(), c) - 0.5 * np.kron(eye, cdc) - 0.5 * np.kron(cdc.T, eye)


def emission_operators() -> list[np.ndarray]:
    """c_m = |m>_x <e| for the three ground sublevels."""
    ops = []
    for m in range(GROUND_DIM):
        c = np.zeros((FULL_DIM, FULL_DIM), dtype=complex)
        c[m, EXCITED] = 1.0
        ops.append(c)
    return ops


@dataclass(frozen=True)
class Liouvillian:
    """Affine generator: ``d vec(rho)/dt = matrix @ vec(rho) + source`` (rad/s).

    ``coherent`` is the part without transit relaxation (Hamiltonian plus
    spontaneous emission); ``matrix = coherent - transit_rate * I``.
    """

    matrix: np.ndarray
    source: np.ndarray
    coherent: np.ndarray
    transit_rate: float

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return unvec(self.matrix @ vec(rho) + self.source)

    def max_frequency(self) -> float:
        """Largest |eigenvalue| of the homogeneous part, rad/s."""
        return float(np.abs(np.linalg.eigvals(self.matrix)).max())


def build_liouvillian(p: SimParams, h: np.ndarray | None = None) -> Liouvillian:
    """Generator of d rho/dt = -i[H, rho] + (Gamma/3) sum_m D[c_m] rho + gamma_t (rho_0 - rho)."""
    if h is None:
        h = build_hamiltonian(p)
    gamma = TWO_PI * p.gamma_hz
    gamma_t = TWO_PI * p.transit_hz
    coherent = hamiltonian_superop(h)
    for c in emission_operators():
        coherent = coherent + (gamma / 3.0) * dissipator(c)
    matrix = coherent - gamma_t * np.eye(FULL_DIM**2)
    return Liouvillian(matrix=matrix, source=gamma_t * vec(unpolarized_ground()), coherent=coherent,
                       transit_rate=gamma_t)


def steady_state(liou: Liouvillian) -> np.ndarray:
    """Unique fixed point of the affine dynamics."""
    evals = np.linalg.eigvals(liou.matrix)
    smallest = np.abs(evals).min()
    if smallest <= 1e-6 * liou.transit_rate:
        raise SteadyStateError(
            f"Liouvillian is (near-)singular: smallest |eigenvalue| = {smallest:.3e} rad/s, "
            f"max Re = {evals.real.max():.3e} rad/s"
        )
    rho = unvec(np.linalg.solve(liou.matrix, -liou.source))
    rho = (rho + rho.conj().T) / 2
    rho /= np.trace(rho).real
    check_density_matrix(rho)
    return rho


def _stability_limit(liou: Liouvillian, dt: float) -> None:
    fmax = liou.max_frequency()
    if dt * fmax > STABILITY_FACTOR:
        raise StepSizeError(
            f"time step {dt:.3e} s too large: limiting frequency {fmax / TWO_PI:.4e} Hz "
            f"requires dt <= {STABILITY_FACTOR / fmax:.3e} s"
        )


def propagate(rho: np.ndarray, liou: Liouvillian, dt: float, n_steps: int) -> np.ndarray:
    """Fixed-step RK4 integration; returns the trajectory, shape (n_steps + 1, 4, 4)."""
    if liou.matrix.any():
        _stability_limit(liou, dt)
    mat, src = liou.matrix, liou.source
    out = np.empty((n_steps + 1, FULL_DIM**2), dtype=complex)
    y = vec(rho).astype(complex)
    out[0] = y
    for k in range(1, n_steps + 1):
        k1 = mat @ y + src
        k2 = mat @ (y + 0.5 * dt * k1) + src
        k3 = mat @ (y + 0.5 * dt * k2) + src
        k4 = mat @ (y + dt * k3) + src
        y = y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        out[k] = y
    # row-wise column-stacking inverse
    return out.reshape(n_steps + 1, FULL_DIM, FULL_DIM).transpose(0, 2, 1)


def exact_step(matrix: np.ndarray, source: np.ndarray, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Discrete map ``y -> P y + q`` solving the affine ODE exactly over dt."""
    n = matrix.shape[0]
    aug = np.zeros((n + 1, n + 1), dtype=complex)
    aug[:n, :n] = matrix
    aug[:n, n] = source
    e = expm(aug * dt)
    return e[:n, :n], e[:n, n]


def evolve_exact(rho: np.ndarray, liou: Liouvillian, times: np.ndarray) -> np.ndarray:
    """Matrix-exponential reference evolution at the given times."""
    y0 = vec(rho).astype(complex)
    out = []
    for t in np.atleast_1d(times):
        prop, shift = exact_step(liou.matrix, liou.source, float(t))
        out.append(unvec(prop @ y0 + shift))
    return np.stack(out)
