"""Command line: simulate, sweep, analyze, state-dump.

Every command prints a short semicolon-delimited report on stdout and writes
CSV files (and SVG figures where asked) into ``--out``.
"""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click
import numpy as np
import yaml

from . import analytics
from .config import SCENARIOS, SHOCKS, ConfigError, RunConfig, dump_config, load_config
from .experiments import SWEEP_TARGETS, SweepSpec, parse_grid, run_sweep

log = logging.getLogger("ibsfc")

REPORT_VARS = ("settled_on", "settled_term", "rate_on", "rate_term", "gamma_on", "gamma_term",
               "lending_facility", "deposit_facility", "ms_deficit", "ms_surplus", "output")


def _parse_set(values) -> dict:
    out = {}
    for item in values:
        if "=" not in item:
            raise click.BadParameter(f"expected key=value, got {item!r}")
        key, raw = item.split("=", 1)
        out[key.strip()] = yaml.safe_load(raw)
    return out


def _build_config(config, overrides: dict) -> RunConfig:
    base = load_config(config) if config else RunConfig()
    try:
        return base.with_overrides(**{k: v for k, v in overrides.items() if v is not None})
    except ConfigError as exc:
        raise click.UsageError(str(exc)) from exc


def _report(frames, burn_in: int, label: str = "") -> None:
    """Post-burn-in ensemble means, one ``variable;value`` line each."""
    for var in REPORT_VARS:
        vals = [np.nanmean(fr.columns[var][burn_in:]) for fr in frames if var in fr.columns]
        if vals:
            click.echo(f"{label}{var};{float(np.mean(vals))!r}")


def _common(f):
    f = click.option("--config", type=click.Path(exists=True, dir_okay=False), help="YAML run configuration.")(f)
    f = click.option("--set", "sets", multiple=True, metavar="KEY=VALUE",
                     help="Dotted config override, e.g. interbank.sigma_ib=2.0 (repeatable).")(f)
    f = click.option("--seed", type=int, default=None)(f)
    f = click.option("--steps", type=int, default=None)(f)
    return f


@click.group()
@click.option("-v", "--verbose", is_flag=True)
def main(verbose: bool) -> None:
    """Two-tier payment system simulator with overnight and term interbank segments."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")


@main.command()
@_common
@click.option("--scenario", type=click.Choice(SCENARIOS), default=None)
@click.option("--shock", type=click.Choice(SHOCKS), default=None)
@click.option("--replicates", type=int, default=None)
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), required=True)
@click.option("--figures/--no-figures", default=True, show_default=True)
def simulate(config, sets, seed, steps, scenario, shock, replicates, workers, out, figures):
    """Run an ensemble and export its time series."""
    from .engine import run_ensemble
    from .plotting import plot_ensemble

    cfg = _build_config(config, {**_parse_set(sets), "seed": seed, "steps": steps,
                                 "interbank.scenario": scenario, "shock": shock,
                                 "replicates": replicates})
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    dump_config(cfg, out / "config.yaml")
    ens = run_ensemble(cfg, workers=workers, dump_dir=out)
    frames = analytics.frames_of(ens)
    analytics.export(frames, out)
    if figures:
        plot_ensemble(frames, out / "figures", label=f"{cfg.scenario}_{cfg.shock}", burn_in=cfg.burn_in)
    click.echo(f"scenario;{cfg.scenario}")
    click.echo(f"shock;{cfg.shock}")
    click.echo(f"replicates;{cfg.replicates}")
    click.echo(f"failed;{sum(r.failed for r in ens.runs)}")
    _report(frames, cfg.burn_in)
    if ens.failed:
        for r in ens.runs:
            if r.failed:
                click.echo(f"replicate {r.replicate}: {r.error}", err=True)
        sys.exit(1)


@main.command()
@_common
@click.option("--param", type=click.Choice(sorted(SWEEP_TARGETS)), required=True)
@click.option("--grid", default=None, help="start:stop:step or comma list; defaults to the parameter's grid.")
@click.option("--scenario", type=click.Choice(SCENARIOS), default=None,
              help="Defaults to maturity for NSFR weights, baseline otherwise.")
@click.option("--replicates", type=int, default=None)
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), required=True)
@click.option("--figures/--no-figures", default=True, show_default=True)
def sweep(config, sets, seed, steps, param, grid, scenario, replicates, workers, out, figures):
    """One-at-a-time parameter sweep."""
    from .experiments import ROBUSTNESS_GRIDS, weight_grid
    from .plotting import plot_sweep

    cfg = _build_config(config, {**_parse_set(sets), "seed": seed, "steps": steps})
    if grid is None:
        values = weight_grid() if param.startswith("m") else ROBUSTNESS_GRIDS[param]
    else:
        values = parse_grid(grid)
    try:
        spec = SweepSpec(param, values, scenario=scenario)
    except ConfigError as exc:
        raise click.UsageError(str(exc)) from exc
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    dump_config(cfg, out / "config.yaml")
    results = run_sweep(spec, cfg, replicates=replicates, workers=workers)
    points = [(val, analytics.frames_of(ens)) for val, ens in results]
    if points:
        analytics.write_sweep_csv(points, param, out / f"sweep_{param}.csv")
    if figures and points:
        plot_sweep(points, param, ("settled_on", "settled_term", "lending_facility", "deposit_facility"),
                   out / "figures", burn_in=cfg.burn_in)
    click.echo(f"param;{param}")
    click.echo(f"points;{len(points)}")
    for val, frames in points:
        _report(frames, cfg.burn_in, label=f"{param}={val!r};")
    if any(ens.failed for _, ens in results):
        sys.exit(1)


@main.command()
@click.argument("run_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--hp/--no-hp", default=True, show_default=True, help="HP de-trended output.")
@click.option("--lambda", "lamb", type=float, default=analytics.HP_LAMBDA_MONTHLY, show_default=True)
@click.option("--ma", type=int, default=None, help="Trailing moving-average window.")
@click.option("--figures/--no-figures", default=True, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), default=None,
              help="Defaults to RUN_DIR/analysis.")
def analyze(run_dir, hp, lamb, ma, figures, out):
    """Post-process an exported ``simulate`` directory."""
    from .plotting import plot_ensemble

    run_dir = Path(run_dir)
    out = Path(out) if out else run_dir / "analysis"
    frames = analytics.read_frames(run_dir)
    if not frames:
        raise click.UsageError(f"no exported series found in {run_dir}")
    out.mkdir(parents=True, exist_ok=True)
    burn_in = 0
    cfg_path = run_dir / "config.yaml"
    if cfg_path.exists():
        burn_in = load_config(cfg_path).burn_in
    trimmed = [fr.trimmed(burn_in) for fr in frames]
    variables = [v for v in trimmed[0].variables() if v != "audit_pass"]
    if hp:
        analytics.write_long_csv(analytics.detrend_frames(trimmed, lamb, variables), out / "hp.csv")
    if ma:
        analytics.write_long_csv(analytics.smooth_frames(trimmed, ma, variables), out / f"ma{ma}.csv")
    if figures:
        plot_ensemble(frames, out / "figures", burn_in=burn_in)
    click.echo(f"replicates;{len(frames)}")
    click.echo(f"periods;{trimmed[0].steps}")
    _report(trimmed, 0)


@main.command("state-dump")
@_common
@click.option("--scenario", type=click.Choice(SCENARIOS), default=None)
@click.option("--shock", type=click.Choice(SHOCKS), default=None)
@click.option("--period", type=int, required=True, help="Number of periods to simulate before dumping.")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="JSON file; stdout if omitted.")
def state_dump(config, sets, seed, steps, scenario, shock, period, out):
    """Dump the full economy state after ``--period`` steps as JSON."""
    from .engine import run_until

    cfg = _build_config(config, {**_parse_set(sets), "seed": seed, "steps": steps,
                                 "interbank.scenario": scenario, "shock": shock})
    if period < 0:
        raise click.UsageError("--period must be non-negative")
    state = run_until(cfg, period)
    text = json.dumps(state.to_dict(), indent=1, sort_keys=True)
    if out:
        Path(out).write_text(text)
        click.echo(f"period;{period}")
        click.echo(f"file;{out}")
    else:
        click.echo(text)


if __name__ == "__main__":
    main()
