"""Command line entry point: ``spinnoise eigen|spectrum|fit|reproduce``.

Exit status is 0 on success, 1 on a runtime failure and 2 on a usage error.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

from .config import OUTPUT_ENV, ConfigError, RunConfig, load_config
from .csvio import read_spectrum, write_fits, write_spectrum
from .pipelines import FIGURES, compute_eigen_sweep, compute_spectrum, reproduce, write_eigen
from .specfit import MODELS, fit_dual_peak


def _overrides(pairs: tuple[str, ...], out: str | None) -> dict[str, str]:
    result = {}
    for item in pairs:
        if "=" not in item:
            raise click.UsageError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        result[k.strip()] = v.strip()
    if out:
        result["output_dir"] = out
    return result


def _load(config_path, pairs, out) -> RunConfig:
    try:
        return load_config(config_path, _overrides(pairs, out))
    except ConfigError as exc:
        raise click.UsageError(str(exc)) from exc


def _fail(exc: Exception):
    click.echo(f"error: {exc}", err=True)
    sys.exit(1)


common = [
    click.option("-c", "--config", "config_path", type=click.Path(exists=True, dir_okay=False),
                 help="Flat key = value config file (units in key names)."),
    click.option("-s", "--set", "pairs", multiple=True, metavar="KEY=VALUE",
                 help="Override a config value; repeatable."),
    click.option("-o", "--out", default=None, help=f"Output directory (overrides ${OUTPUT_ENV})."),
]


def with_common(fn):
    for opt in reversed(common):
        fn = opt(fn)
    return fn


@click.group()
def main():
    """Light-shift spin noise simulator."""


@main.command()
@with_common
def eigen(config_path, pairs, out):
    """Exact eigenfrequencies along a power, detuning or theta sweep."""
    cfg = _load(config_path, pairs, out)
    try:
        cfg.validate(need_sweep=True)
    except ConfigError as exc:
        raise click.UsageError(str(exc)) from exc
    try:
        result = compute_eigen_sweep(cfg)
        path = Path(cfg.output_dir) / "eigen.csv"
        write_eigen(path, result)
    except Exception as exc:  # noqa: BLE001
        _fail(exc)
    if result.trend is not None:
        click.echo(f"{result.trend.law} law: coefficient {result.trend.coefficient:.6g}, R^2 {result.trend.r_squared:.6f}")
    if result.variable == "theta":
        try:
            click.echo(f"nu+ - nu- changes sign at theta = {result.zero_crossing():.4f} deg")
        except ValueError:
            click.echo("no ordering reversal on this grid")
    click.echo(str(path))


@main.command()
@with_common
@click.option("--plot/--no-plot", default=None, help="Also write an SVG line chart.")
def spectrum(config_path, pairs, out, plot):
    """Spin noise PSD by the resolvent or stochastic method."""
    cfg = _load(config_path, pairs, out)
    try:
        cfg.validate()
    except ConfigError as exc:
        raise click.UsageError(str(exc)) from exc
    if cfg.method == "eigen":
        raise click.UsageError("spectrum needs method = resolvent or stochastic")
    emit = cfg.emit_plots if plot is None else plot
    try:
        s = compute_spectrum(cfg)
        path = Path(cfg.output_dir) / "spectrum.csv"
        write_spectrum(path, s, cfg.to_entries())
        if emit:
            from .plots import line_chart

            line_chart(path.with_suffix(".svg"), [(s.freqs_hz / 1e6, s.psd, s.channel)], "frequency (MHz)", "PSD")
    except Exception as exc:  # noqa: BLE001
        _fail(exc)
    click.echo(str(path))


@main.command()
@click.argument("inputs", nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("-m", "--model", type=click.Choice(MODELS), default="two_lorentzians", show_default=True)
@click.option("-o", "--out", default=None, help="Output CSV (default: fit.csv in the output directory).")
def fit(inputs, model, out):
    """Fit dual-peak models to one or more spectrum CSVs."""
    import os

    target = Path(out) if out else Path(os.environ.get(OUTPUT_ENV, "out")) / "fit.csv"
    try:
        results = [(str(p), fit_dual_peak(read_spectrum(p), model)) for p in inputs]
        write_fits(target, results)
    except Exception as exc:  # noqa: BLE001
        _fail(exc)
    for src, r in results:
        flag = " (single peak)" if r.single_peak else ""
        click.echo(f"{src}: splitting {r.splitting_hz:.1f} +- {r.splitting_err_hz:.1f} Hz{flag}")
    click.echo(str(target))


@main.command(name="reproduce")
@click.argument("figure", type=click.Choice(FIGURES))
@with_common
@click.option("--plot/--no-plot", default=True, show_default=True)
def reproduce_cmd(figure, config_path, pairs, out, plot):
    """Run the simulation chain behind one figure panel set."""
    cfg = _load(config_path, pairs, out)
    target = Path(cfg.output_dir) / figure
    try:
        reproduce(figure, target, cfg, emit_plots=plot)
    except Exception as exc:  # noqa: BLE001
        _fail(exc)
    click.echo(str(target))


if __name__ == "__main__":
    main()
