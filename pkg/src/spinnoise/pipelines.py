"""Orchestration: sweeps, spectra and the per-figure reproduction chains."""

from __future__ import annotations

import dataclasses
import warnings
from pathlib import Path

import numpy as np

from .config import RunConfig
from .csvio import atomic_write_text, header_lines, write_fits, write_spectrum
from .detection import ellipticity_observable, faraday_observable
from .hamiltonian import PerturbativeRegimeWarning, SimParams, power_to_rabi
from .lightshift import SweepResult, exact_eigenfrequencies, fit_law, splitting_vs
from .noise import Spectrum, resolvent_spectrum, stochastic_spectrum
from .specfit import FitError, fit_dual_peak

FIGURES = ("fig2", "fig3", "fig4", "fig5")


class PipelineError(RuntimeError):
    def __init__(self, stage: str, params: dict, cause: Exception):
        super().__init__(f"stage {stage!r} failed ({cause}) with parameters {params}")
        self.stage = stage
        self.params = params


def _stage(name: str, params: dict, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except PipelineError:
        raise
    except Exception as exc:  # noqa: BLE001 - re-raised with context
        raise PipelineError(name, params, exc) from exc


def observable_for(cfg: RunConfig):
    if cfg.channel == "ellipticity":
        return ellipticity_observable(cfg.params.theta_deg)
    return faraday_observable()


def compute_spectrum(cfg: RunConfig) -> Spectrum:
    obs = observable_for(cfg)
    if cfg.method == "stochastic":
        return stochastic_spectrum(cfg.params, obs, injection=cfg.injection)
    if cfg.method == "resolvent":
        return resolvent_spectrum(cfg.params, obs, injection=cfg.injection)
    raise ValueError(f"method {cfg.method!r} does not produce a spectrum")


def compute_eigen_sweep(cfg: RunConfig) -> SweepResult:
    cfg.validate(need_sweep=True)
    result = splitting_vs(cfg.sweep_variable, cfg.params, cfg.sweep_si())
    result.meta.update(cfg.to_entries())
    return result


def write_eigen(path, result: SweepResult) -> None:
    tmp = Path(path)
    tmp.parent.mkdir(parents=True, exist_ok=True)
    result.to_csv(str(tmp) + ".part")
    Path(str(tmp) + ".part").replace(tmp)


def _plot(path, series, xlabel, ylabel, title=""):
    from .plots import line_chart

    line_chart(path, series, xlabel, ylabel, title)


def _spectrum_cfg(cfg: RunConfig, **changes) -> RunConfig:
    return dataclasses.replace(cfg, params=cfg.params.replace(**changes))


def _fit_or_flag(s: Spectrum, model: str):
    try:
        return fit_dual_peak(s, model)
    except FitError:
        if model == "hole":
            return fit_dual_peak(s, "two_lorentzians")
        raise


def reproduce(figure: str, out_dir, cfg: RunConfig | None = None, emit_plots: bool = True) -> dict:
    """Run one figure chain into ``out_dir``; returns a summary dict."""
    if figure not in FIGURES:
        raise ValueError(f"unknown figure {figure!r}; expected one of {FIGURES}")
    cfg = cfg or RunConfig()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", PerturbativeRegimeWarning)
        return {"fig2": _fig2, "fig3": _fig3, "fig4": _fig4, "fig5": _fig5}[figure](cfg, out, emit_plots)


def _spectra_chain(cfg, out, tag, key, values, changes_for, xlabel):
    rows, fits, series = [], [], []
    for v in values:
        c = _spectrum_cfg(cfg, **changes_for(v))
        params = c.params.as_dict()
        s = _stage("spectrum", params, compute_spectrum, c)
        name = f"{tag}_spectrum_{key}{v:g}.csv"
        _stage("write", params, write_spectrum, out / name, s, c.to_entries())
        fit = _stage("fit", params, _fit_or_flag, s, c.fit_model)
        eig = _stage("eigen", params, exact_eigenfrequencies, c.params)
        fits.append((name, fit))
        rows.append((v, fit.splitting_hz, eig.splitting_hz, eig.ordering))
        series.append((s.freqs_hz / 1e6, s.psd / s.psd.max(), f"{xlabel} = {v:g}"))
    _stage("write", {}, write_fits, out / f"{tag}_fits.csv", fits)
    return rows, series


def _summary_csv(path, header: dict, columns, rows) -> None:
    text = header_lines(header) + ",".join(columns) + "\n"
    for r in rows:
        text += ",".join(repr(float(x)) if not isinstance(x, (int, np.integer)) else str(int(x)) for x in r) + "\n"
    atomic_write_text(path, text)


def _fig2(cfg: RunConfig, out: Path, emit_plots: bool) -> dict:
    base = dataclasses.replace(cfg, params=cfg.params.replace(larmor_hz=3e6, theta_deg=0.0, detuning_hz=1.5e9))
    powers = [1.0, 2.0, 3.0, 4.0, 5.0]
    rows, series = _spectra_chain(base, out, "fig2", "P", powers,
                                  lambda v: {"power_mw": v, "rabi_hz": power_to_rabi(v)}, "P (mW)")
    trend = _stage("trend", {}, fit_law, [r[0] for r in rows], [r[1] for r in rows], "linear")
    head = {"figure": "fig2", "trend_law": trend.law, "trend_coefficient": repr(trend.coefficient),
            "trend_r_squared": repr(trend.r_squared)}
    _summary_csv(out / "fig2_summary.csv", head, ["power_mw", "fit_splitting_hz", "eigen_splitting_hz", "ordering"], rows)
    if emit_plots:
        _plot(out / "fig2.svg", series, "frequency (MHz)", "PSD (normalized)", "rotation noise vs probe power")
    return {"rows": rows, "trend": trend}


def _fig3(cfg: RunConfig, out: Path, emit_plots: bool) -> dict:
    base = dataclasses.replace(cfg, params=cfg.params.replace(rabi_hz=70e6, detuning_hz=1.5e9))
    thetas = [float(t) for t in np.arange(0.0, 91.0, 5.0)]
    rows, series = _spectra_chain(base, out, "fig3", "theta", thetas, lambda v: {"theta_deg": v}, "theta (deg)")
    eig = np.array([r[2] for r in rows])
    theta_min = thetas[int(np.argmin(eig))]
    head = {"figure": "fig3", "theta_min_eigen_splitting_deg": repr(theta_min)}
    _summary_csv(out / "fig3_summary.csv", head, ["theta_deg", "fit_splitting_hz", "eigen_splitting_hz", "ordering"], rows)
    if emit_plots:
        _plot(out / "fig3.svg", series[::3], "frequency (MHz)", "PSD (normalized)", "rotation noise vs polarization")
    return {"rows": rows, "theta_min": theta_min}


def _fig4(cfg: RunConfig, out: Path, emit_plots: bool) -> dict:
    p = cfg.params.replace(theta_deg=0.0, detuning_hz=1.5e9)
    shifts = _stage("power sweep", p.as_dict(), splitting_vs, "power", p, list(np.linspace(0.0, 5.0, 11)))
    shifts.meta.update({"figure": "fig4b"})
    write_eigen(out / "fig4b_shifts.csv", shifts)
    power = _stage("power sweep", p.as_dict(), splitting_vs, "power", p, [1.0, 2.0, 3.0, 4.0, 5.0])
    power.meta.update({"figure": "fig4c"})
    write_eigen(out / "fig4c_power.csv", power)
    q = p.replace(power_mw=3.0, rabi_hz=power_to_rabi(3.0))
    det = _stage("detuning sweep", q.as_dict(), splitting_vs, "detuning", q, list(np.linspace(1e9, 3e9, 9)))
    det.meta.update({"figure": "fig4d"})
    write_eigen(out / "fig4d_detuning.csv", det)
    prod = det.splittings * det.parameters
    flatness = float(np.ptp(prod) / np.mean(prod))
    head = {"figure": "fig4"}
    _summary_csv(out / "fig4_trends.csv", head, ["slope_hz_per_mw", "power_r_squared", "hyperbolic_coefficient_hz2",
                                                 "hyperbolic_r_squared", "splitting_times_detuning_spread"],
                 [(power.trend.coefficient, power.trend.r_squared, det.trend.coefficient, det.trend.r_squared, flatness)])
    if emit_plots:
        x = shifts.parameters
        _plot(out / "fig4b.svg", [(x, [r.delta_minus1_hz / 1e3 for r in shifts.rows], "m=-1"),
                                   (x, [r.delta_0_hz / 1e3 for r in shifts.rows], "m=0"),
                                   (x, [r.delta_plus1_hz / 1e3 for r in shifts.rows], "m=+1")],
              "power (mW)", "light shift (kHz)")
        _plot(out / "fig4d.svg", [(det.parameters / 1e9, det.splittings / 1e3, "exact"),
                                   (det.parameters / 1e9, det.trend.coefficient / det.parameters / 1e3, "a / detuning")],
              "detuning (GHz)", "splitting (kHz)")
    return {"power": power, "detuning": det, "flatness": flatness}


def _fig5(cfg: RunConfig, out: Path, emit_plots: bool) -> dict:
    p = cfg.params.replace(rabi_hz=70e6, detuning_hz=1.5e9)
    sweep = _stage("theta sweep", p.as_dict(), splitting_vs, "theta", p, list(np.linspace(0.0, 90.0, 181)))
    crossing = sweep.zero_crossing()
    sweep.meta.update({"figure": "fig5", "zero_crossing_deg": repr(crossing)})
    write_eigen(out / "fig5_theta.csv", sweep)
    if emit_plots:
        x = sweep.parameters
        _plot(out / "fig5a.svg", [(x, [r.delta_minus1_hz / 1e3 for r in sweep.rows], "m=-1"),
                                   (x, [r.delta_0_hz / 1e3 for r in sweep.rows], "m=0"),
                                   (x, [r.delta_plus1_hz / 1e3 for r in sweep.rows], "m=+1")],
              "theta (deg)", "light shift (kHz)")
        _plot(out / "fig5c.svg", [(x, sweep.splittings / 1e3, "splitting")], "theta (deg)", "splitting (kHz)")
    return {"sweep": sweep, "zero_crossing": crossing}
