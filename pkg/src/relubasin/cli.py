"""``relubasin`` command line.

Exit status: 0 when every verdict is CONSISTENT and nothing errored, 1 on a
REFUTED or INCONCLUSIVE verdict (or errored trials), 2 on malformed input,
3 when a path endpoint violates a Theorem 1 condition.
"""

from __future__ import annotations

import json
import sys
import time
from pathlib import Path

import click
import numpy as np
import yaml

from . import datasets as ds
from .basins import EmptyBasin, extract_sign_pattern, solve_basin_value
from .io import (DataFormatError, read_dataset, read_params, write_dataset, write_json,
                 write_params, write_records_csv)
from .montecarlo import (BOUND_SPECS, DEFAULT_TRIALS, QUICK_TRIALS, appc_local_minima_census,
                         run_bound_experiment)
from .nets import get_loss
from .paths import ConditionError, PathError, PathSpec, build_monotone_path

EXIT_OK, EXIT_FAIL, EXIT_PARSE, EXIT_CONDITION = 0, 1, 2, 3


class ConfigError(click.UsageError):
    exit_code = EXIT_PARSE


def _load_mapping(path: str | None, what: str) -> dict:
    """YAML (a superset of JSON) file holding a mapping; ``None`` gives ``{}``."""
    if path is None:
        return {}
    try:
        doc = yaml.safe_load(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"{what} {path}: {exc.strerror}") from None
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        loc = f"{path}:{mark.line + 1}:{mark.column + 1}" if mark else path
        raise ConfigError(f"{what} {loc}: {getattr(exc, 'problem', exc)}") from None
    if doc is None:
        return {}
    if not isinstance(doc, dict):
        raise ConfigError(f"{what} {path}: expected a mapping at the top level")
    return doc


def _outdir(out: str | None) -> Path | None:
    if out is None:
        return None
    p = Path(out)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _emit(obj) -> None:
    from .montecarlo.stats import _clean
    click.echo(json.dumps(_clean(obj), indent=2, sort_keys=True))


def _fail_parse(exc: Exception) -> None:
    click.echo(f"error: {exc}", err=True)
    sys.exit(EXIT_PARSE)


# ---------------------------------------------------------------------------
# Command bodies (shared by the subcommands and ``run --config``)
# ---------------------------------------------------------------------------


def do_generate(kind: str, cfg: dict, seed: int, out: Path | None) -> int:
    try:
        data, teacher, spec = ds.generate(kind, cfg, seed)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"generate: {exc}") from None
    summary = {"kind": kind, "seed": seed, "spec": ds.spec_to_dict(spec), "d": data.d, "m": data.m,
               "constants": {k: v for k, v in data.meta.items()
                             if k in ("B", "c", "delta", "gamma", "sigma_max", "sigma_min", "rank",
                                      "radius_bound", "eps", "teacher_objective")}}
    if out is not None:
        write_dataset(data, out / "dataset.csv", {"seed": seed, "spec": ds.spec_to_dict(spec)})
        if teacher is not None:
            write_params(teacher, out / "params.json")
            summary["teacher_file"] = str(out / "params.json")
        write_json(summary, out / "report.json")
    _emit(summary)
    return EXIT_OK


def do_solve_basin(dataset: str, params: str, loss: str | None, tol: float, out: Path | None) -> int:
    try:
        data = read_dataset(dataset)
        p = read_params(params)
    except DataFormatError as exc:
        _fail_parse(exc)
    try:
        pattern = extract_sign_pattern(p, data)
        res = solve_basin_value(pattern, data, loss, tol=tol)
        doc = res.to_dict()
        doc["residuals"] = {"feasibility": res.feasibility_residual, "gradient": res.grad_residual,
                            "gap": res.gap}
        status = EXIT_OK if res.converged else EXIT_FAIL
    except EmptyBasin as exc:
        doc = {"empty": True, "neuron": exc.neuron, "message": str(exc)}
        status = EXIT_OK
    except ValueError as exc:
        raise ConfigError(f"solve-basin: {exc}") from None
    if out is not None:
        write_json(doc, out / "report.json")
        write_params(p, out / "params.json")
    _emit(doc)
    return status


def do_path(start: str, end: str, dataset: str, loss: str | None, N: int, eps: float, out: Path | None) -> int:
    try:
        data = read_dataset(dataset)
        A, B = read_params(start), read_params(end)
    except DataFormatError as exc:
        _fail_parse(exc)
    try:
        res = build_monotone_path(PathSpec(A, B, N=N, eps=eps), loss or data.loss, data)
    except ConditionError as exc:
        click.echo(f"error: Theorem 1 condition {exc.condition} violated: {exc}", err=True)
        if out is not None:
            write_json({"condition": exc.condition, "message": str(exc), "lam": exc.lam}, out / "report.json")
        return EXIT_CONDITION
    except PathError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_FAIL
    verdict = res.verdict()
    if out is not None:
        write_json(verdict, out / "report.json")
        write_records_csv([{"segment": s, "lam": l, "c_tilde": c, "objective": o} for s, l, c, o in res.rows()],
                          out / "trials.csv")
    _emit(verdict)
    return EXIT_OK if res.monotone else EXIT_FAIL


def _report_status(rep) -> int:
    return EXIT_OK if rep.verdict == "CONSISTENT" and rep.errors == 0 else EXIT_FAIL


def do_mc(bound: str, cfg: dict, trials: int | None, seed: int, workers: int, out: Path | None) -> int:
    try:
        rep = run_bound_experiment(bound, cfg, trials, seed, workers)
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(f"mc: {exc}") from None
    if out is not None:
        write_json(rep.to_dict(), out / "report.json")
        write_records_csv(rep.diagnostics, out / "trials.csv")
        write_json(rep.params, out / "params.json")
    _emit(rep.to_dict())
    return _report_status(rep)


def do_verify_all(quick: bool, seed: int, workers: int, out: Path | None) -> int:
    budget = QUICK_TRIALS if quick else DEFAULT_TRIALS
    runs = [(b, {}) for b in ("prop1", "thm3", "thm5", "thm6", "thm4", "thm7", "cap", "noisy")]
    runs.insert(1, ("prop1", {"loss": "cross_entropy"}))
    summary, status, all_rows = [], EXIT_OK, []
    for bound, cfg in runs:
        t0 = time.perf_counter()
        rep = run_bound_experiment(bound, cfg, budget[bound], seed, workers)
        extra_verdict = rep.extra.get("construction_verdict")
        ok = _report_status(rep) == EXIT_OK and extra_verdict in (None, "CONSISTENT")
        status = status if ok else EXIT_FAIL
        label = bound if not cfg else f"{bound}[{','.join(f'{k}={v}' for k, v in cfg.items())}]"
        summary.append({"bound": label, "verdict": rep.verdict, "construction_verdict": extra_verdict,
                        "estimate": rep.estimate, "lower": rep.lower, "upper": rep.upper, "bound_value": rep.bound,
                        "trials": rep.trials, "errors": rep.errors, "seconds": round(time.perf_counter() - t0, 3)})
        all_rows += [{"bound": label, **r} for r in rep.diagnostics]
        click.echo(f"{label:28s} {rep.verdict:12s} p_hat={rep.estimate:.4f} "
                   f"[{rep.lower:.4f}, {rep.upper:.4f}] bound={rep.bound:.4f}", err=True)
    census = appc_local_minima_census(16, 0.1, trials=0)
    census_ok = census.exact_probability <= census.chernoff_bound
    status = status if census_ok else EXIT_FAIL
    doc = {"quick": quick, "seed": seed, "runs": summary,
           "census": {k: v for k, v in census.to_dict().items() if k != "report"},
           "all_consistent": status == EXIT_OK}
    if out is not None:
        write_json(doc, out / "report.json")
        write_records_csv(all_rows, out / "trials.csv")
    _emit(doc)
    return status


# ---------------------------------------------------------------------------
# click wiring
# ---------------------------------------------------------------------------

_seed = click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=0, show_default=True,
                     help="Global unsigned 64-bit seed.")
_out = click.option("--out", type=click.Path(file_okay=False), default=None,
                    help="Output directory (report.json, trials.csv, dataset.csv, params.json).")
_workers = click.option("--workers", type=click.IntRange(1), default=1, show_default=True,
                        help="Worker processes; results do not depend on this.")


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(package_name="artifact")
def main():
    """Basin values, monotone paths and Monte Carlo bound checks for ReLU networks."""


@main.command()
@click.option("--kind", type=click.Choice(["singleton", "fullrank", "clustered", "lowrank"]), required=True)
@click.option("--params", "params_file", type=click.Path(dir_okay=False), default=None,
              help="YAML/JSON file with generator parameters.")
@_seed
@_out
def generate(kind, params_file, seed, out):
    """Generate a validated special dataset."""
    sys.exit(do_generate(kind, _load_mapping(params_file, "params"), seed, _outdir(out)))


@main.command("solve-basin")
@click.option("--dataset", type=click.Path(dir_okay=False), required=True)
@click.option("--params", "params_file", type=click.Path(dir_okay=False), required=True)
@click.option("--loss", default=None, help="Override the dataset's loss.")
@click.option("--tol", type=float, default=1e-8, show_default=True)
@_out
def solve_basin(dataset, params_file, loss, tol, out):
    """Minimal objective over the basin containing the given parameters."""
    sys.exit(do_solve_basin(dataset, params_file, loss, tol, _outdir(out)))


@main.command()
@click.option("--start", type=click.Path(dir_okay=False), required=True)
@click.option("--end", type=click.Path(dir_okay=False), required=True)
@click.option("--dataset", type=click.Path(dir_okay=False), required=True)
@click.option("--loss", default=None)
@click.option("--N", "N", type=click.IntRange(1), default=1000, show_default=True)
@click.option("--eps", type=float, default=0.1, show_default=True)
@_out
def path(start, end, dataset, loss, N, eps, out):
    """Monotone rescaled path between two parameter files."""
    sys.exit(do_path(start, end, dataset, loss, N, eps, _outdir(out)))


@main.command()
@click.option("--bound", type=click.Choice(sorted(BOUND_SPECS)), required=True)
@click.option("--params", "params_file", type=click.Path(dir_okay=False), default=None)
@click.option("--trials", type=click.IntRange(1), default=None, help="Defaults to the full acceptance size.")
@_seed
@_workers
@_out
def mc(bound, params_file, trials, seed, workers, out):
    """Monte Carlo estimate of one bound's event probability."""
    sys.exit(do_mc(bound, _load_mapping(params_file, "params"), trials, seed, workers, _outdir(out)))


@main.command("verify-all")
@click.option("--quick", is_flag=True, help="Reduced trial counts.")
@_seed
@_workers
@_out
def verify_all(quick, seed, workers, out):
    """Run every bound experiment and the single-neuron census."""
    sys.exit(do_verify_all(quick, seed, workers, _outdir(out)))


_COMMANDS = {"generate", "solve-basin", "path", "mc", "verify-all"}


@main.command()
@click.option("--config", "config_file", type=click.Path(dir_okay=False), required=True)
def run(config_file):
    """Run the command described by a YAML experiment config."""
    cfg = _load_mapping(config_file, "config")
    sys.exit(run_config(cfg, config_file))


def run_config(cfg: dict, source: str = "<config>") -> int:
    """Dispatch an experiment config: ``command``, ``seed``, ``out``, ``workers`` and a block per command."""
    known = {"command", "seed", "out", "workers"} | _COMMANDS
    for key in cfg:
        if key not in known:
            raise ConfigError(f"{source}: unknown field {key!r}")
    cmd = cfg.get("command")
    if cmd not in _COMMANDS:
        raise ConfigError(f"{source}: field 'command' must be one of {sorted(_COMMANDS)}, got {cmd!r}")
    seed = cfg.get("seed", 0)
    if not isinstance(seed, int) or not 0 <= seed < 2**64:
        raise ConfigError(f"{source}: field 'seed' must be an unsigned 64-bit integer")
    workers = cfg.get("workers", 1)
    if not isinstance(workers, int) or workers < 1:
        raise ConfigError(f"{source}: field 'workers' must be a positive integer")
    out = _outdir(cfg.get("out"))
    block = cfg.get(cmd) or {}
    if not isinstance(block, dict):
        raise ConfigError(f"{source}: field {cmd!r} must be a mapping")

    def need(key):
        if key not in block:
            raise ConfigError(f"{source}: field '{cmd}.{key}' is required")
        return block[key]

    if cmd == "generate":
        return do_generate(need("kind"), block.get("params") or {}, seed, out)
    if cmd == "solve-basin":
        return do_solve_basin(need("dataset"), need("params"), block.get("loss"), block.get("tol", 1e-8), out)
    if cmd == "path":
        return do_path(need("start"), need("end"), need("dataset"), block.get("loss"),
                       int(block.get("N", 1000)), float(block.get("eps", 0.1)), out)
    if cmd == "mc":
        return do_mc(need("bound"), block.get("params") or {}, block.get("trials"), seed, workers, out)
    return do_verify_all(bool(block.get("quick", False)), seed, workers, out)


if __name__ == "__main__":  # pragma: no cover
    main()
