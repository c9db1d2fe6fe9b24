"""AC Stark shifts of the ground sublevels and the two precession frequencies.

Two routes are provided. :func:`perturbative_shifts` evaluates the secular
second-order formulas (Raman |+1> <-> |-1> coupling dropped).
:func:`exact_eigenfrequencies` diagonalizes the full 4x4 Hamiltonian and
tracks the dressed ground states by maximal overlap with the bare |m>_x.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .hamiltonian import TWO_PI, PerturbativeRegimeWarning, SimParams, build_hamiltonian, power_to_rabi

TRACKING_MIN_OVERLAP = 0.6


class DegenerateTrackingError(RuntimeError):
    """Dressed states cannot be unambiguously matched to bare sublevels."""

    def __init__(self, message: str, overlaps: np.ndarray):
        super().__init__(f"{message}\noverlap matrix |<bare|dressed>|^2:\n{np.array2string(overlaps, precision=3)}")
        self.overlaps = overlaps


@dataclass(frozen=True)
class LightShifts:
    """Frequency shifts delta_m / 2pi (Hz) of the x-quantized ground sublevels."""

    delta_minus1_hz: float
    delta_0_hz: float
    delta_plus1_hz: float

    def as_tuple(self) -> tuple[float, float, float]:
        """(delta_-1, delta_0, delta_+1)."""
        return (self.delta_minus1_hz, self.delta_0_hz, self.delta_plus1_hz)

    @property
    def splitting_hz(self) -> float:
        """|nu_+ - nu_-| implied by these shifts."""
        return abs(self.delta_plus1_hz + self.delta_minus1_hz - 2 * self.delta_0_hz)


@dataclass(frozen=True)
class EigenFrequencies:
    nu_plus_hz: float
    nu_minus_hz: float
    shifts: LightShifts | None = None

    @property
    def splitting_hz(self) -> float:
        return abs(self.nu_plus_hz - self.nu_minus_hz)

    @property
    def ordering(self) -> int:
        """+1 if nu_+ > nu_-, -1 if nu_+ < nu_-, 0 if equal."""
        return int(np.sign(self.nu_plus_hz - self.nu_minus_hz))


def perturbative_shifts(p: SimParams) -> LightShifts:
    """Secular light shifts for a linearly polarized probe at angle theta.

    delta_0 = (1/3) cos^2(theta) Omega^2 / (4 Delta) and
    delta_{+-1} = (1/3) sin^2(theta) Omega^2 / (8 Delta), all in Hz.
    """
    if p.detuning_hz == 0:
        raise ValueError("perturbative light shifts diverge at zero detuning")
    t = np.deg2rad(p.theta_deg)
    base = p.rabi_hz**2 / (4.0 * p.detuning_hz) / 3.0
    d0 = base * np.cos(t) ** 2
    d1 = base * np.sin(t) ** 2 / 2.0
    return LightShifts(delta_minus1_hz=float(d1), delta_0_hz=float(d0), delta_plus1_hz=float(d1))


def perturbative_eigenfrequencies(p: SimParams) -> EigenFrequencies:
    s = perturbative_shifts(p)
    return EigenFrequencies(
        nu_plus_hz=p.larmor_hz + s.delta_plus1_hz - s.delta_0_hz,
        nu_minus_hz=p.larmor_hz + s.delta_0_hz - s.delta_minus1_hz,
        shifts=s,
    )


def track_ground_states(h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (rad/s) of the dressed states matched to bare |+1>, |0>, |-1>, |e>.

    Returns ``(energies, overlaps)`` where ``energies[i]`` belongs to bare
    state ``i`` and ``overlaps`` is the full |<bare|dressed>|^2 matrix.
    Raises :class:`DegenerateTrackingError` when a ground state is shared.
    """
    evals, evecs = np.linalg.eigh(h)
    overlaps = np.abs(evecs) ** 2  # rows: bare, columns: dressed
    rows, cols = linear_sum_assignment(-overlaps)
    assigned = overlaps[rows, cols]
    for bare in range(3):
        if assigned[bare] < TRACKING_MIN_OVERLAP:
            competing = np.sort(overlaps[bare])[::-1][:2]
            if competing[1] < TRACKING_MIN_OVERLAP:
                raise DegenerateTrackingError(
                    f"bare ground state {bare} has no dressed partner with overlap >= {TRACKING_MIN_OVERLAP}",
                    overlaps,
                )
    return evals[cols], overlaps


def exact_eigenfrequencies(p: SimParams) -> EigenFrequencies:
    """nu_+ = (E_+1 - E_0)/h and nu_- = (E_0 - E_-1)/h from exact diagonalization."""
    if p.larmor_hz <= 0:
        raise ValueError("exact eigenfrequency tracking needs larmor_hz > 0")
    energies, _ = track_ground_states(build_hamiltonian(p))
    e_p1, e_0, e_m1 = energies[:3] / TWO_PI
    shifts = LightShifts(
        delta_minus1_hz=float(e_m1 + p.larmor_hz),
        delta_0_hz=float(e_0),
        delta_plus1_hz=float(e_p1 - p.larmor_hz),
    )
    return EigenFrequencies(nu_plus_hz=float(e_p1 - e_0), nu_minus_hz=float(e_0 - e_m1), shifts=shifts)


def magic_angle() -> float:
    """Polarization angle (deg) where the secular shifts of all sublevels coincide."""
    return float(np.rad2deg(np.arctan(np.sqrt(2.0))))


@dataclass
class TrendFit:
    """Least-squares law through the origin: ``y = a x`` or ``y = a / x``."""

    law: str
    coefficient: float
    r_squared: float


def fit_law(x: Sequence[float], y: Sequence[float], law: str) -> TrendFit:
    """Single-coefficient least squares for ``linear`` (a x) or ``hyperbolic`` (a / x)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 3:
        raise ValueError("a trend fit needs at least 3 points")
    if np.ptp(x) == 0:
        raise ValueError("degenerate abscissae: all x values are equal")
    if law == "linear":
        basis = x
    elif law == "hyperbolic":
        if np.any(x == 0):
            raise ValueError("hyperbolic law undefined at x = 0")
        basis = 1.0 / x
    else:
        raise ValueError(f"unknown law {law!r}")
    a = float(basis @ y / (basis @ basis))
    resid = y - a * basis
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(resid @ resid) / ss_tot if ss_tot > 0 else float(resid @ resid == 0)
    return TrendFit(law=law, coefficient=a, r_squared=r2)


@dataclass
class SweepRow:
    parameter: float
    nu_plus_hz: float
    nu_minus_hz: float
    splitting_hz: float
    ordering: int
    delta_minus1_hz: float
    delta_0_hz: float
    delta_plus1_hz: float


@dataclass
class SweepResult:
    variable: str
    rows: list[SweepRow]
    trend: TrendFit | None = None
    meta: dict = field(default_factory=dict)

    @property
    def parameters(self) -> np.ndarray:
        return np.array([r.parameter for r in self.rows])

    @property
    def splittings(self) -> np.ndarray:
        return np.array([r.splitting_hz for r in self.rows])

    @property
    def signed_splittings(self) -> np.ndarray:
        """nu_+ - nu_-, keeping the ordering information."""
        return np.array([r.nu_plus_hz - r.nu_minus_hz for r in self.rows])

    def zero_crossing(self) -> float:
        """Linearly interpolated parameter where nu_+ - nu_- changes sign."""
        x, y = self.parameters, self.signed_splittings
        idx = np.nonzero(np.sign(y[:-1]) * np.sign(y[1:]) < 0)[0]
        if idx.size == 0:
            exact = np.nonzero(y == 0)[0]
            if exact.size:
                return float(x[exact[0]])
            raise ValueError("no sign change of nu_+ - nu_- on this grid")
        i = idx[0]
        return float(x[i] - y[i] * (x[i + 1] - x[i]) / (y[i + 1] - y[i]))

    def to_csv(self, path) -> None:
        columns = ["parameter", "nu_plus_hz", "nu_minus_hz", "splitting_hz", "ordering",
                   "delta_minus1_hz", "delta_0_hz", "delta_plus1_hz"]
        with open(path, "w", newline="") as fh:
            for key, value in self.meta.items():
                fh.write(f"# {key} = {value}\n")
            if self.trend is not None:
                fh.write(f"# trend_law = {self.trend.law}\n")
                fh.write(f"# trend_coefficient = {self.trend.coefficient!r}\n")
                fh.write(f"# trend_r_squared = {self.trend.r_squared!r}\n")
            writer = csv.writer(fh)
            writer.writerow(columns)
            for r in self.rows:
                writer.writerow([repr(float(getattr(r, c))) if c != "ordering" else r.ordering for c in columns])


SWEEP_FIELDS = {"power": "power_mw", "detuning": "detuning_hz", "theta": "theta_deg"}


def splitting_vs(variable: str, p: SimParams, grid: Sequence[float]) -> SweepResult:
    """Exact eigenfrequencies along a one-parameter sweep.

    ``variable`` is ``power`` (grid in mW), ``detuning`` (grid in Hz) or
    ``theta`` (grid in degrees). Power sweeps are fitted with a line through
    the origin, detuning sweeps with a hyperbola; theta sweeps carry no law.
    """
    grid = list(grid)
    if not grid:
        raise ValueError("sweep grid is empty")
    if variable not in SWEEP_FIELDS:
        raise ValueError(f"unknown sweep variable {variable!r}; expected one of {sorted(SWEEP_FIELDS)}")
    rows = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", PerturbativeRegimeWarning)
        for value in grid:
            if variable == "power":
                q = p.replace(power_mw=float(value), rabi_hz=power_to_rabi(float(value)))
            else:
                q = p.replace(**{SWEEP_FIELDS[variable]: float(value)})
            ef = exact_eigenfrequencies(q)
            s = ef.shifts
            rows.append(SweepRow(float(value), ef.nu_plus_hz, ef.nu_minus_hz, ef.splitting_hz, ef.ordering,
                                 s.delta_minus1_hz, s.delta_0_hz, s.delta_plus1_hz))
    result = SweepResult(variable=variable, rows=rows)
    law = {"power": "linear", "detuning": "hyperbolic"}.get(variable)
    if law is not None and len(rows) >= 3:
        result.trend = fit_law(result.parameters, result.splittings, law)
    return result
