"""Command-line interface: ``simulate``, ``estimate``, ``krige`` and ``benchmark``.

Exit codes: 0 success, 2 usage or parameter error, 3 data error, 4 numerical
or estimation failure. Errors go to stderr as one JSON object per line.
Every run writes ``<output>.manifest.json`` next to its outputs; passing
that file back through ``--config`` repeats the run.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import logging
import platform
import sys
from pathlib import Path

import numpy as np

from . import __version__, _kernels
from .aliasing import SpectralEstimate, assemble
from .bench import ExperimentConfig, replicate_curves, run_experiment
from .decay import default_schedule, empirical_variogram, fit_alpha0, geometric_schedule
from .errors import DataError, EstimationError, NumericalError, ParameterError, SemispecError
from .gridize import default_cutoff
from .kriging import krige, prediction_targets
from .models import KINDS, CovarianceModel
from .serialize import (read_column, read_json, read_sample_csv, write_json, write_sample_csv,
                        write_table)
from .simulate import simulate
from .spline_spectral import SplineSpectral, fit_hhc

log = logging.getLogger("semispec")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 2, 3, 4

# built-in defaults, applied after the config file so explicit flags win
DEFAULTS = {
    "simulate": {"model": "matern", "sigma2": 1.0, "range": 1.0, "nu": 0.5, "n": 250,
                 "domain_length": None, "out": "sample.csv"},
    "estimate": {"method": "yz", "domain_length": None, "omega_c": None, "lambda_grid": None,
                 "h_max": None, "n_freq": 513, "freq_max": 4.0, "out": "spectrum.csv",
                 "variogram_csv": None},
    "krige": {"estimate": None, "model": None, "sigma2": 1.0, "range": 1.0, "nu": 0.5,
              "domain_length": None, "targets": None, "n_pred": 100, "out": "predictions.csv"},
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_model_flags(p, with_default_kind=True):
    p.add_argument("--model", choices=KINDS, default=None,
                   help="covariance family" + (" (default matern)" if with_default_kind else ""))
    p.add_argument("--sigma2", type=float, default=None)
    p.add_argument("--range", type=float, default=None, help="length scale")
    p.add_argument("--nu", type=float, default=None, help="Matern smoothness")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="semispec", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")

    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="base random seed (default 0)")
    common.add_argument("--config", default=None, help="JSON config or a previous manifest.json")
    common.add_argument("--out-dir", default=None, help="directory for outputs (default .)")
    common.add_argument("-v", "--verbose", action="count", default=0)

    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", parents=[common], help="draw a Gaussian process sample")
    _add_model_flags(p)
    p.add_argument("--n", type=int, default=None, help="number of locations")
    p.add_argument("--domain-length", type=float, default=None, help="window length (default n)")
    p.add_argument("--out", default=None, help="CSV path (columns s,x)")

    p = sub.add_parser("estimate", parents=[common], help="fit a spectral estimate to a sample")
    p.add_argument("--input", required=False, default=None, help="sample CSV (columns s,x)")
    p.add_argument("--method", choices=("hhc", "yz"), default=None)
    p.add_argument("--domain-length", type=float, default=None)
    p.add_argument("--omega-c", type=float, default=None, help="cutoff (default pi * N / L)")
    p.add_argument("--lambda-grid", type=float, nargs="+", default=None)
    p.add_argument("--h-max", type=float, default=None, help="largest variogram lag")
    p.add_argument("--n-freq", type=int, default=None, help="frequency grid size")
    p.add_argument("--freq-max", type=float, default=None,
                   help="grid upper end as a multiple of omega_c (yz only)")
    p.add_argument("--out", default=None, help="curve CSV (omega,f)")
    p.add_argument("--variogram-csv", default=None, help="also write the (h,u,count) table")

    p = sub.add_parser("krige", parents=[common], help="simple kriging predictions")
    p.add_argument("--input", default=None, help="sample CSV (columns s,x)")
    p.add_argument("--estimate", default=None, help="JSON sidecar written by 'estimate'")
    _add_model_flags(p, with_default_kind=False)
    p.add_argument("--domain-length", type=float, default=None)
    p.add_argument("--targets", default=None, help="CSV with a column s")
    p.add_argument("--n-pred", type=int, default=None, help="equally spaced targets if no CSV")
    p.add_argument("--out", default=None, help="predictions CSV (s,prediction)")

    p = sub.add_parser("benchmark", parents=[common], help="Monte Carlo comparison")
    p.add_argument("--replicates", type=int, default=None, help="override the config")
    p.add_argument("--curves", action="store_true", default=None,
                   help="also dump replicate-0 curves as whitespace-separated .dat files")
    p.add_argument("--normalize-ipe", action="store_true", default=None,
                   help="divide IPE values by the true kriging variance")
    return parser


# ---------------------------------------------------------------------------
# config resolution and manifest
# ---------------------------------------------------------------------------
def _load_config(path) -> dict:
    if path is None:
        return {}
    d = read_json(path)
    if not isinstance(d, dict):
        raise ParameterError(f"config {path} must hold a JSON object")
    # a manifest carries the resolved config of the run that wrote it
    if "command" in d and isinstance(d.get("config"), dict):
        d = d["config"]
    return d


def resolve(args) -> dict:
    """Merge explicit flags over the config file over built-in defaults."""
    cmd = args.command
    file_cfg = _load_config(args.config)
    flags = {k: v for k, v in vars(args).items()
             if k not in ("command", "config", "verbose", "out_dir") and v is not None}
    if cmd == "benchmark":
        cfg = dict(file_cfg)
        cfg.update({k: v for k, v in flags.items() if k in ("seed", "replicates", "normalize_ipe")})
        cfg["curves"] = bool(flags.get("curves", file_cfg.get("curves", False)))
        return cfg
    cfg = dict(DEFAULTS[cmd])
    cfg["seed"] = 0
    unknown = sorted(set(file_cfg) - set(cfg) - {"input"})
    if unknown:
        raise ParameterError(f"unknown config key(s) for {cmd}: {unknown}")
    cfg.update(file_cfg)
    cfg.update(flags)
    return cfg


def _versions() -> dict:
    import numba
    import scipy
    return {"semispec": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__, "numba": numba.__version__,
            "kernels": _kernels.active().name}


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def write_manifest(out_dir: Path, command: str, config: dict, outputs: list, started: str,
                   seeds=None) -> Path:
    manifest = {"command": command, "config": config, "seeds": seeds,
                "versions": _versions(), "started": started, "finished": _now(),
                "outputs": [str(p) for p in outputs]}
    # named after the primary output so several runs can share a directory
    stem = Path(outputs[0]).stem if outputs else command
    return write_json(out_dir / f"{stem}.manifest.json", manifest)


def _out(out_dir: Path, name) -> Path:
    p = Path(name)
    return p if p.is_absolute() else out_dir / p


def _model_from(cfg: dict) -> CovarianceModel:
    return CovarianceModel(cfg["model"], cfg["sigma2"], cfg["range"], cfg["nu"])


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------
def cmd_simulate(cfg: dict, out_dir: Path):
    model = _model_from(cfg)
    n = int(cfg["n"])
    length = float(cfg["domain_length"]) if cfg["domain_length"] is not None else float(n)
    cfg["domain_length"] = length
    sample = simulate(model, n, length, int(cfg["seed"]))
    path = write_sample_csv(_out(out_dir, cfg["out"]), sample)
    log.info("wrote %d observations to %s", sample.n, path)
    return [path], [int(cfg["seed"])]


def _schedule(cfg, sample):
    return default_schedule(sample) if cfg.get("h_max") is None else geometric_schedule(cfg["h_max"])


def cmd_estimate(cfg: dict, out_dir: Path):
    if cfg.get("input") is None:
        raise UsageError("estimate needs --input")
    sample = read_sample_csv(cfg["input"], cfg["domain_length"])
    cfg["domain_length"] = sample.domain_length
    omega_c = default_cutoff(sample) if cfg["omega_c"] is None else float(cfg["omega_c"])
    spline = fit_hhc(sample, omega_c, cfg["lambda_grid"])
    log.info("K = %d lag classes, %d nonempty; lambda = %g",
             spline.lag_sums.max_lag, spline.lag_sums.nonzero_lags, spline.lam)
    n_freq = int(cfg["n_freq"])
    if n_freq < 2:
        raise ParameterError("n_freq must be at least 2")
    sidecar = {"method": cfg["method"], "n": sample.n, "domain_length": sample.domain_length,
               "K": spline.lag_sums.max_lag, "nonzero_lag_classes": spline.lag_sums.nonzero_lags}
    outputs = []
    if cfg["method"] == "hhc":
        omega = np.linspace(0.0, omega_c, n_freq)
        f = spline(omega)
        sidecar["estimate"] = spline.to_dict()
    else:
        triples = empirical_variogram(sample, _schedule(cfg, sample))
        decay = fit_alpha0(triples)
        est = assemble(spline, decay)
        log.info("alpha0 = %.4f (clamped: %s), gamma = %.4f, tail_scale = %.4g",
                 decay.alpha0, decay.clamped, est.gamma, est.tail_scale)
        omega = np.linspace(0.0, float(cfg["freq_max"]) * omega_c, n_freq)
        f = est.positive(omega)
        sidecar["estimate"] = est.to_dict()
        sidecar["variogram"] = {"lags": triples.lags, "values": triples.values,
                                "counts": triples.counts}
        if cfg.get("variogram_csv"):
            outputs.append(write_table(_out(out_dir, cfg["variogram_csv"]), ["h", "u", "count"],
                                       triples.rows()))
    curve = write_table(_out(out_dir, cfg["out"]), ["omega", "f"], zip(omega, f))
    side = write_json(curve.with_suffix(".json"), sidecar)
    return [curve, side, *outputs], None


def load_estimate(path):
    """Rebuild a fitted estimate from an ``estimate`` sidecar."""
    d = read_json(path)
    try:
        kind, payload = d["method"], d["estimate"]
        if kind == "hhc":
            return SplineSpectral.from_dict(payload)
        if kind == "yz":
            return SpectralEstimate.from_dict(payload)
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{path}: malformed estimate sidecar ({exc})") from None
    raise DataError(f"{path}: unknown method {kind!r}")


def cmd_krige(cfg: dict, out_dir: Path):
    if cfg.get("input") is None:
        raise UsageError("krige needs --input")
    if (cfg["estimate"] is None) == (cfg["model"] is None):
        raise UsageError("krige needs exactly one of --estimate or --model")
    sample = read_sample_csv(cfg["input"], cfg["domain_length"])
    cfg["domain_length"] = sample.domain_length
    if cfg["estimate"] is not None:
        est = load_estimate(cfg["estimate"])
        cov, name = est.covariance, Path(cfg["estimate"]).stem
    else:
        model = _model_from(cfg)
        cov, name = model.covariance, model.kind
    if cfg["targets"] is not None:
        targets = read_column(cfg["targets"], "s")
    else:
        targets = prediction_targets(sample.domain_length, int(cfg["n_pred"]))
    res = krige(sample, cov, targets, name)
    if res.jitter:
        log.warning("kriging matrix regularised with jitter %g * C(0)", res.jitter)
    path = write_table(_out(out_dir, cfg["out"]), ["s", "prediction"],
                       zip(res.targets, res.predictions))
    return [path], None


def cmd_benchmark(cfg: dict, out_dir: Path):
    if "model" not in cfg:
        raise UsageError("benchmark needs --config with at least 'model' and 'n'")
    curves = cfg.pop("curves", False)
    config = ExperimentConfig.from_dict(cfg)
    cfg.clear()
    cfg.update(config.to_dict())
    cfg["curves"] = curves
    result = run_experiment(config)
    summary = write_table(out_dir / "summary.csv",
                          ["n", "method", "ise_f", "ise_c", "mipe", "replicates", "failures"],
                          [(r.n, r.method, r.ise_f, r.ise_c, r.mipe, r.replicates, r.failures)
                           for r in result.summary])
    details = write_table(out_dir / "details.csv",
                          ["replicate", "seed", "method", "status", "ise_f", "ise_c",
                           "ipe_median", "jitter", "info"],
                          [(d.replicate, d.seed, d.method, d.status, d.ise_f, d.ise_c,
                            d.ipe_median, d.jitter, json.dumps(d.info, sort_keys=True))
                           for d in result.details])
    ipe_rows = [(j, m, i, v) for (j, m), vals in sorted(result.ipe_values.items())
                for i, v in enumerate(vals)]
    ipe_path = write_table(out_dir / "ipe.csv", ["replicate", "method", "target", "ipe"], ipe_rows)
    outputs = [summary, details, ipe_path]
    if curves:
        outputs += _dump_curves(config, out_dir)
    for r in result.summary:
        log.info("%-6s n=%d ISE(f)=%.4g ISE(C)=%.4g mIPE=%.4g failures=%d",
                 r.method, r.n, r.ise_f, r.ise_c, r.mipe, r.failures)
    seeds = [config.seed + j for j in range(config.replicates)]
    return outputs, seeds


def _dump_curves(config, out_dir: Path):
    omega, f, h, c = replicate_curves(config)
    paths = []
    for name, grid, curves in (("spectrum", omega, f), ("covariance", h, c)):
        path = out_dir / f"curves_{name}.dat"
        cols = list(curves)
        with open(path, "w") as fh:
            fh.write("# " + " ".join(["x", *cols]) + "\n")
            for i, x in enumerate(grid):
                vals = [curves[k][i] for k in cols]
                fh.write(" ".join(repr(float(v)) for v in (x, *vals)) + "\n")
        paths.append(path)
    return paths


COMMANDS = {"simulate": cmd_simulate, "estimate": cmd_estimate, "krige": cmd_krige,
            "benchmark": cmd_benchmark}


def _error(kind: str, message: str, code: int) -> int:
    rec = {"error": kind, "message": " ".join(str(message).split()), "exit_code": code}
    print(json.dumps(rec), file=sys.stderr)
    return code


def dispatch(argv=None) -> int:
    """Run one subcommand; returns the process exit code."""
    started = _now()
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        return _error("UsageError", exc, EXIT_USAGE)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", force=True)
    out_dir = Path(args.out_dir or ".")
    try:
        cfg = resolve(args)
        outputs, seeds = COMMANDS[args.command](cfg, out_dir)
        write_manifest(out_dir, args.command, cfg, outputs, started, seeds)
    except (UsageError, ParameterError) as exc:
        return _error(type(exc).__name__, exc, EXIT_USAGE)
    except DataError as exc:
        return _error("DataError", exc, EXIT_DATA)
    except (NumericalError, EstimationError) as exc:
        return _error(type(exc).__name__, exc, EXIT_NUMERICAL)
    except SemispecError as exc:
        return _error(type(exc).__name__, exc, EXIT_NUMERICAL)
    except OSError as exc:
        return _error("DataError", f"{exc.strerror}: {exc.filename}", EXIT_DATA)
    return EXIT_OK


def main() -> None:  # pragma: no cover - thin wrapper
    sys.exit(dispatch())


if __name__ == "__main__":  # pragma: no cover
    main()
