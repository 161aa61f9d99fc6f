"""Command-line front end.

Commands: ``calibrate`` (one Monte Carlo threshold, JSON report), ``roc``
(sweep a custom scenario), ``reproduce <preset-id>`` (run a bundled
experiment preset), ``pd-vs-snr`` (detection probability sweep), and
``specfun-check`` (quadrature-oracle battery for the numerical kernel).

Every experiment command writes a CSV, a provenance JSON sibling that is
sufficient to re-run it exactly, and a rendered figure.  Outputs are
write-once; pass ``--force`` to overwrite.  Re-running with identical flags
and seed produces byte-identical CSV regardless of ``--workers``.  The
``SPECSENSE_OUT_DIR`` environment variable overrides ``--out-dir``.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

import click

from . import __version__, calibration, evaluation, report
from .detectors import UniformPrior, detector_from_label
from .errors import ConfigError
from .noise import ScenarioConfig, UniformNoise

DEFAULT_TRIALS = 100_000  # desk scale; standard errors are always reported
_DETECTOR_DEFAULT = "lrt:K=10,lrt:K=20,ave,avn,llr"


def _out_dir(flag_value: str | None) -> Path:
    env = os.environ.get("SPECSENSE_OUT_DIR")
    path = Path(env) if env else Path(flag_value or ".")
    path.mkdir(parents=True, exist_ok=True)
    return path


def _load_config(path: str) -> ScenarioConfig:
    try:
        return ScenarioConfig.from_json(Path(path).read_text(encoding="utf-8"))
    except ConfigError as exc:
        raise click.ClickException(f"config validation failed: {exc}") from exc
    except OSError as exc:
        raise click.ClickException(f"cannot read config {path}: {exc}") from exc


def _prior_for(config: ScenarioConfig, prior_flag: str | None) -> UniformPrior:
    if prior_flag is not None:
        parts = prior_flag.split(",")
        if len(parts) != 2:
            raise click.ClickException("--prior expects 'delta_min,delta_max'")
        try:
            return UniformPrior(float(parts[0]), float(parts[1]))
        except ValueError as exc:
            raise click.ClickException(str(exc)) from exc
    if isinstance(config.noise_model, UniformNoise):
        return UniformPrior(config.noise_model.delta_min, config.noise_model.delta_max)
    raise click.ClickException(
        "the scenario's noise model is not uniform; pass --prior delta_min,delta_max"
    )


def _parse_detectors(spec: str, prior: UniformPrior):
    try:
        return tuple(detector_from_label(tok, prior) for tok in spec.split(",") if tok)
    except ValueError as exc:
        raise click.ClickException(str(exc)) from exc


def _parse_grid(spec: str) -> tuple[float, ...]:
    try:
        grid = tuple(float(tok) for tok in spec.split(",") if tok)
    except ValueError as exc:
        raise click.ClickException(f"bad grid value in {spec!r}") from exc
    if not grid:
        raise click.ClickException("grid must be a nonempty comma list")
    return grid


def _output_path(out_dir: Path, name: str, force: bool) -> Path:
    path = out_dir / name
    if path.exists() and not force:
        raise click.ClickException(f"{path} exists; pass --force to overwrite")
    return path


def _cache_for(out_dir: Path, no_cache: bool):
    if no_cache:
        return None
    return calibration.ThresholdCache(out_dir / "threshold-cache")


_workers_option = click.option(
    "--workers", type=int, default=lambda: os.cpu_count() or 1, show_default="cpu count",
    help="Worker processes; the output is identical for any value.",
)


@click.group()
@click.version_option(version=__version__, prog_name="specsense")
def main():
    """Energy-detection toolkit for noise-power uncertainty."""


@main.command()
@click.option("--detector", required=True, help="Detector to calibrate: ave or avn.")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True),
              help="ScenarioConfig JSON file.")
@click.option("--prior", default=None, help="Assumed interval 'delta_min,delta_max' "
              "(default: the config's uniform noise interval).")
@click.option("--target-pfa", type=float, default=0.1, show_default=True)
@click.option("--trials", type=int, default=DEFAULT_TRIALS, show_default=True)
@click.option("--seed", type=int, default=None, help="Default: the config's master_seed.")
@click.option("--out-dir", default=None, help="Output directory (default '.').")
@click.option("--out", "out_name", default=None, help="Report filename override.")
@click.option("--force", is_flag=True, help="Overwrite an existing report.")
def calibrate(detector, config_path, prior, target_pfa, trials, seed, out_dir, out_name, force):
    """Calibrate one Monte Carlo threshold and write its JSON report."""
    config = _load_config(config_path)
    det = _parse_detectors(detector, _prior_for(config, prior))[0]
    if seed is None:
        seed = config.master_seed
    try:
        rep = calibration.calibrate_mc(det, config, target_pfa, trials, seed)
    except (ValueError, TypeError) as exc:
        raise click.ClickException(str(exc)) from exc
    key = calibration.calibration_cache_key(det, config, target_pfa, trials, seed)
    out = _out_dir(out_dir)
    path = _output_path(out, out_name or f"calibration-{key[:16]}.json", force)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(rep.to_json_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    click.echo(
        f"{det.label}: threshold {rep.threshold.value:.10g} at target_pfa {target_pfa} "
        f"(se {rep.standard_error:.3g}) -> {path}"
    )


def _run_roc_command(preset, experiment, trials, seed, workers, out_dir, force, cache):
    points = evaluation.run_roc(preset, trials, seed=seed, workers=workers, cache=cache)
    csv_path = _output_path(out_dir, f"{experiment}.csv", force)
    prov_path = _output_path(out_dir, f"{experiment}.provenance.json", force)
    png_path = _output_path(out_dir, f"{experiment}.png", force)
    evaluation.write_roc_csv(csv_path, experiment, points, seed)
    evaluation.write_provenance(
        prov_path, evaluation.provenance_record(experiment, preset, trials, seed)
    )
    report.plot_roc(points, experiment, png_path)
    click.echo(f"wrote {csv_path}, {prov_path}, {png_path}")


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--detectors", "detector_spec", default=_DETECTOR_DEFAULT, show_default=True)
@click.option("--prior", default=None, help="Assumed interval for ave/avn/llr.")
@click.option("--pfa-grid", "grid_spec", default=None,
              help="Comma list of target false-alarm probabilities.")
@click.option("--trials", type=int, default=DEFAULT_TRIALS, show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--out-dir", default=None)
@click.option("--name", default="roc", show_default=True, help="Output basename.")
@click.option("--force", is_flag=True)
@click.option("--no-cache", is_flag=True, help="Bypass the threshold cache.")
@_workers_option
def roc(config_path, detector_spec, prior, grid_spec, trials, seed, out_dir, name,
        force, no_cache, workers):
    """ROC sweep of a custom scenario configuration."""
    config = _load_config(config_path)
    dets = _parse_detectors(detector_spec, _prior_for(config, prior))
    grid = _parse_grid(grid_spec) if grid_spec else evaluation.DEFAULT_PFA_GRID
    preset = evaluation.ExperimentPreset(
        id=name, config=config, detectors=dets, pfa_grid=grid
    )
    if seed is None:
        seed = config.master_seed
    out = _out_dir(out_dir)
    try:
        _run_roc_command(preset, name, trials, seed, workers, out, force,
                         _cache_for(out, no_cache))
    except ValueError as exc:
        raise click.ClickException(str(exc)) from exc


@main.command()
@click.argument("preset_id", type=click.Choice(sorted(evaluation.PRESETS)))
@click.option("--pfa-grid", "grid_spec", default=None,
              help="Override the preset's target grid.")
@click.option("--trials", type=int, default=DEFAULT_TRIALS, show_default=True)
@click.option("--seed", type=int, default=None, help="Default: the preset's master seed.")
@click.option("--out-dir", default=None)
@click.option("--force", is_flag=True)
@click.option("--no-cache", is_flag=True)
@_workers_option
def reproduce(preset_id, grid_spec, trials, seed, out_dir, force, no_cache, workers):
    """Run a bundled experiment preset and write <preset-id>.csv/.provenance.json/.png."""
    preset = evaluation.get_preset(preset_id)
    if grid_spec:
        preset = evaluation.ExperimentPreset(
            id=preset.id, config=preset.config, detectors=preset.detectors,
            pfa_grid=_parse_grid(grid_spec),
            calibration_config=preset.calibration_config, notes=preset.notes,
        )
    if seed is None:
        seed = preset.config.master_seed
    out = _out_dir(out_dir)
    try:
        _run_roc_command(preset, preset_id, trials, seed, workers, out, force,
                         _cache_for(out, no_cache))
    except ValueError as exc:
        raise click.ClickException(str(exc)) from exc


@main.command("pd-vs-snr")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--detectors", "detector_spec", default=_DETECTOR_DEFAULT, show_default=True)
@click.option("--prior", default=None)
@click.option("--snr-grid", "snr_spec", default="0.2,0.4,0.6,0.8,1.0,1.4,2.0",
              show_default=True)
@click.option("--target-pfa", type=float, default=0.1, show_default=True)
@click.option("--trials", type=int, default=DEFAULT_TRIALS, show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--out-dir", default=None)
@click.option("--name", default="pd-vs-snr", show_default=True)
@click.option("--force", is_flag=True)
@click.option("--no-cache", is_flag=True)
@_workers_option
def pd_vs_snr_cmd(config_path, detector_spec, prior, snr_spec, target_pfa, trials, seed,
                  out_dir, name, force, no_cache, workers):
    """Detection probability versus SNR at a fixed target false alarm."""
    config = _load_config(config_path)
    dets = _parse_detectors(detector_spec, _prior_for(config, prior))
    snrs = _parse_grid(snr_spec)
    if seed is None:
        seed = config.master_seed
    out = _out_dir(out_dir)
    try:
        points = evaluation.pd_vs_snr(
            config, dets, snrs, target_pfa, trials, seed=seed, workers=workers,
            cache=_cache_for(out, no_cache),
        )
    except ValueError as exc:
        raise click.ClickException(str(exc)) from exc
    csv_path = _output_path(out, f"{name}.csv", force)
    prov_path = _output_path(out, f"{name}.provenance.json", force)
    png_path = _output_path(out, f"{name}.png", force)
    evaluation.write_snr_csv(csv_path, name, points, seed)
    record = {
        "experiment": name,
        "config": config.to_json_dict(),
        "detectors": [d.label for d in dets],
        "snr_grid": list(snrs),
        "target_pfa": target_pfa,
        "trials": trials,
        "seed": seed,
        "version": __version__,
    }
    evaluation.write_provenance(prov_path, record)
    report.plot_pd_vs_snr(points, name, png_path)
    click.echo(f"wrote {csv_path}, {prov_path}, {png_path}")


@main.command("specfun-check")
def specfun_check():
    """Run the quadrature-oracle battery and print the worst observed errors."""
    from .diagnostics import run_specfun_battery

    checks = run_specfun_battery()
    failed = False
    for chk in checks:
        status = "ok" if chk.passed else "FAIL"
        click.echo(
            f"{status:4s} {chk.name}: max {chk.kind} error {chk.worst_error:.3e} "
            f"(tolerance {chk.tolerance:.0e})"
        )
        failed = failed or not chk.passed
    if failed:
        raise click.ClickException("special-function battery exceeded tolerance")


if __name__ == "__main__":
    main()
