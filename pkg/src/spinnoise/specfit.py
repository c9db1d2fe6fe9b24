"""Dual-peak fitting of noise spectra and trend laws for the splitting.

Two lineshape models are available:

``hole``
    A broad Lorentzian with a narrower Lorentzian hole at the same centre,
    ``A L(nu; c, w_b) - B L(nu; c, w_h) + offset``.
``two_lorentzians``
    Two Lorentzians of common width placed symmetrically about ``c``.

``L`` is a unit-height Lorentzian parametrized by its FWHM. The splitting is
always measured between the maxima of the fitted model, not between bins.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal as sp_signal
from scipy.optimize import least_squares, minimize_scalar

from .lightshift import TrendFit, fit_law
from .noise import Spectrum

MODELS = ("hole", "two_lorentzians")


class FitError(RuntimeError):
    pass


def lorentzian(nu, center, fwhm):
    return 1.0 / (1.0 + ((nu - center) / (0.5 * fwhm)) ** 2)


def hole_model(nu, amp_broad, amp_hole, center, width_broad, width_hole, offset):
    return amp_broad * lorentzian(nu, center, width_broad) - amp_hole * lorentzian(nu, center, width_hole) + offset


def two_lorentzian_model(nu, amp_low, amp_high, center, splitting, width, offset):
    return (amp_low * lorentzian(nu, center - splitting / 2, width)
            + amp_high * lorentzian(nu, center + splitting / 2, width) + offset)


_MODEL_FUNCS = {"hole": hole_model, "two_lorentzians": two_lorentzian_model}


@dataclass
class FitResult:
    """Outcome of a dual-peak fit. Frequencies in Hz, amplitudes in PSD units.

    For the ``two_lorentzians`` model ``width_broad_hz`` is the common
    component FWHM, ``amp_broad``/``amp_hole`` hold the lower/upper component
    amplitudes and ``width_hole_hz`` is None.
    """

    model: str
    center_hz: float
    splitting_hz: float
    splitting_err_hz: float
    width_broad_hz: float
    width_hole_hz: float | None
    amp_broad: float
    amp_hole: float
    offset: float
    residual_rms: float
    single_peak: bool
    peaks_hz: tuple[float, ...] = ()
    params: tuple[float, ...] = ()

    def evaluate(self, nu) -> np.ndarray:
        return _MODEL_FUNCS[self.model](np.asarray(nu, dtype=float), *self.params)


def _model_maxima(func, params, lo, hi, n=4001) -> list[float]:
    nu = np.linspace(lo, hi, n)
    y = func(nu, *params)
    idx, _ = sp_signal.find_peaks(y)
    step = nu[1] - nu[0]
    out = []
    for i in idx:
        r = minimize_scalar(lambda v: -func(v, *params), bounds=(nu[i] - step, nu[i] + step),
                            method="bounded", options={"xatol": step * 1e-9})
        out.append((float(func(r.x, *params)), float(r.x)))
    out.sort(reverse=True)
    return [x for _, x in out]


def _splitting_of(func, params, lo, hi) -> tuple[float, list[float]]:
    maxima = _model_maxima(func, params, lo, hi)
    if len(maxima) < 2:
        return 0.0, maxima
    two = sorted(maxima[:2])
    return two[1] - two[0], two


def _initial_guess(x: np.ndarray, y: np.ndarray, model: str) -> np.ndarray:
    off = float(np.percentile(y, 5))
    w = np.clip(y - off, 0, None)
    if w.sum() <= 0:
        raise FitError("spectrum carries no structure above its floor")
    center = float(np.sum(w * x) / w.sum())
    second = float(np.sqrt(np.sum(w * (x - center) ** 2) / w.sum()))
    span = x[-1] - x[0]
    bin_w = np.median(np.diff(x))
    idx, _ = sp_signal.find_peaks(y, prominence=0.05 * (y.max() - off))
    if idx.size >= 2:
        top = np.sort(idx[np.argsort(y[idx])[-2:]])
        sep = float(x[top[1]] - x[top[0]])
        dip = float(y[top[0] : top[1] + 1].min())
        center = float(0.5 * (x[top[0]] + x[top[1]]))
    else:
        sep, dip = 0.0, float(y.max())
    peak = float(y.max()) - off
    above = x[y - off >= 0.5 * peak]
    half_width = max(float(above[-1] - above[0]), 3 * bin_w)
    if model == "hole":
        wb = float(np.clip(2.0 * second, 3 * bin_w, span))
        wb = max(wb, 1.2 * half_width)
        wh = float(np.clip(sep if sep > 0 else wb / 3, 2 * bin_w, 0.9 * wb))
        amp_b = peak / max(lorentzian(center + sep / 2, center, wb), 1e-3) if sep > 0 else peak
        amp_h = float(np.clip(amp_b + off - dip, 0.02 * amp_b, 0.95 * amp_b)) if sep > 0 else 0.05 * amp_b
        return np.array([amp_b, amp_h, center, wb, wh, off])
    width = max(half_width - sep, 3 * bin_w) if sep > 0 else half_width
    return np.array([peak, peak, center, sep if sep > 0 else 0.2 * width, width, off])


def _bounds(model: str, x: np.ndarray):
    lo_f, hi_f = x[0], x[-1]
    span = hi_f - lo_f
    bin_w = np.median(np.diff(x))
    if model == "hole":
        lower = [0.0, 0.0, lo_f, 0.1 * bin_w, 0.1 * bin_w, -np.inf]
        upper = [np.inf, np.inf, hi_f, 50 * span, 50 * span, np.inf]
    else:
        lower = [0.0, 0.0, lo_f, 0.0, 0.1 * bin_w, -np.inf]
        upper = [np.inf, np.inf, hi_f, span, 50 * span, np.inf]
    return np.array(lower), np.array(upper)


def fit_dual_peak(s: Spectrum, model: str = "hole", max_nfev: int = 2000) -> FitResult:
    """Least-squares fit of a dual-peak model; the splitting is read off its maxima.

    Raises
    ------
    FitError
        On non-convergence, or when the hole model ends with a hole deeper
        than the broad line (``amp_hole >= amp_broad``).
    """
    if model not in MODELS:
        raise ValueError(f"unknown model {model!r}; expected one of {MODELS}")
    func = _MODEL_FUNCS[model]
    f = s.freqs_hz
    if len(f) < 8:
        raise FitError("too few points to fit")
    # work in centred MHz-like units with unit peak height
    f0 = 0.5 * (f[0] + f[-1])
    fscale = 0.5 * (f[-1] - f[0])
    yscale = float(np.max(np.abs(s.psd))) or 1.0
    x = (f - f0) / fscale
    y = s.psd / yscale

    p0 = _initial_guess(x, y, model)
    lower, upper = _bounds(model, x)
    pad = 1e-9 * (upper - lower)
    pad[~np.isfinite(pad)] = 0.0
    p0 = np.clip(p0, lower + pad, upper - pad)
    p0 = np.where(p0 <= lower, np.nextafter(lower, upper), p0)
    res = least_squares(lambda q: func(x, *q) - y, p0, bounds=(lower, upper), method="trf",
                        xtol=1e-8, ftol=1e-15, gtol=1e-15, max_nfev=max_nfev, x_scale="jac")
    if not res.success and res.status != 0:
        raise FitError(f"fit failed: {res.message}")
    if res.status == 0:
        raise FitError(f"fit did not converge within {max_nfev} evaluations")
    q = res.x
    if model == "hole" and q[1] >= q[0]:
        raise FitError(f"unphysical hole model: hole amplitude {q[1]:.4g} >= broad amplitude {q[0]:.4g}")

    split, maxima = _splitting_of(func, q, x[0], x[-1])
    dof = max(len(x) - len(q), 1)
    rss = float(res.fun @ res.fun)
    jac = res.jac
    cov = np.linalg.pinv(jac.T @ jac) * rss / dof
    err = 0.0
    if split > 0:
        grad = np.zeros(len(q))
        for i in range(len(q)):
            h = 1e-6 * max(abs(q[i]), 1e-3)
            qp, qm = q.copy(), q.copy()
            qp[i] += h
            qm[i] -= h
            grad[i] = (_splitting_of(func, qp, x[0], x[-1])[0] - _splitting_of(func, qm, x[0], x[-1])[0]) / (2 * h)
        err = float(np.sqrt(max(grad @ cov @ grad, 0.0))) * fscale

    if model == "hole":
        amp_b, amp_h, c, wb, wh, off = q
        widths = (wb * fscale, wh * fscale)
        phys = (amp_b * yscale, amp_h * yscale, c * fscale + f0, wb * fscale, wh * fscale, off * yscale)
    else:
        amp_b, amp_h, c, d, w, off = q
        widths = (w * fscale, None)
        phys = (amp_b * yscale, amp_h * yscale, c * fscale + f0, d * fscale, w * fscale, off * yscale)
    return FitResult(
        model=model,
        center_hz=float(c * fscale + f0),
        splitting_hz=float(split * fscale),
        splitting_err_hz=err,
        width_broad_hz=float(widths[0]),
        width_hole_hz=None if widths[1] is None else float(widths[1]),
        amp_broad=float(amp_b * yscale),
        amp_hole=float(amp_h * yscale),
        offset=float(off * yscale),
        residual_rms=float(np.sqrt(rss / len(x)) * yscale),
        single_peak=split == 0.0,
        peaks_hz=tuple(float(m * fscale + f0) for m in maxima),
        params=tuple(float(v) for v in phys),
    )


def fit_trend(points, law: str) -> TrendFit:
    """Fit ``splitting = a x`` (linear) or ``splitting = a / x`` (hyperbolic) to (x, y) pairs."""
    pts = np.asarray(list(points), dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 3:
        raise ValueError("fit_trend needs at least 3 (x, splitting) points")
    return fit_law(pts[:, 0], pts[:, 1], law)
