"""Command-line front end.

    pdesuite generate --pde advection --param beta=0.4 --samples 16 --seed 7
    pdesuite evaluate TRUTH.h5 PRED.h5
    pdesuite inverse TRUTH.h5 --horizon 15

Exit codes: 0 ok, 2 configuration / input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import fields, replace
from pathlib import Path

import numpy as np
import yaml

from .dataio import DatasetError, emit_report, format_report_table, read_dataset
from .grid import NumericalFailure
from .inverse import InverseConfig, estimate_ic, evaluate_estimate, reconstruct_ic
from .metrics import forward_report, mean_std_reports
from .pipeline import (ConfigError, GenerateConfig, default_out_dir, forward_map, generate,
                       metric_array)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
log = logging.getLogger("pdesuite")


def _parse_params(items) -> dict:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise ConfigError(f"--param expects k=v, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = yaml.safe_load(v)
    return out


def _load_config(path) -> dict:
    if path is None:
        return {}
    try:
        data = yaml.safe_load(Path(path).read_text()) or {}
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must be a mapping")
    return data


def _merge(base: dict, args, keys) -> dict:
    """CLI flags override config-file keys of the same name."""
    out = dict(base)
    for k in keys:
        v = getattr(args, k, None)
        if v is not None:
            out[k] = v
    return out


def build_generate_config(args) -> GenerateConfig:
    data = _merge(_load_config(args.config), args, ("pde", "ns", "nt", "samples", "seed", "out",
                                                    "workers", "precision", "t_end"))
    params = dict(data.get("params") or {})
    params.update(_parse_params(args.param))
    data["params"] = params
    known = {f.name for f in fields(GenerateConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "pde" not in data:
        raise ConfigError("--pde is required")
    return GenerateConfig(**data).resolved()


def cmd_generate(args) -> int:
    cfg = build_generate_config(args)
    res = generate(cfg)
    for idx, why in res.rejected.items():
        print(f"rejected sample stream_id={idx}: {why}", file=sys.stderr)
    print(res.path)
    return EXIT_OK


def _out_dir(args) -> Path:
    return Path(args.out) if args.out else default_out_dir()


def cmd_evaluate(args) -> int:
    truth, pred = read_dataset(args.truth), read_dataset(args.pred)
    a, b = metric_array(truth), metric_array(pred)
    if a.shape != b.shape:
        raise ConfigError(f"shape mismatch: truth {a.shape} vs prediction {b.shape}")
    report = forward_report(b, a)
    report.metadata.update(truth=str(args.truth), prediction=str(args.pred))
    out = _out_dir(args)
    stem = out / f"evaluate--{Path(args.truth).stem}"
    js, txt = emit_report(report, stem)
    if not args.no_plots:
        from .plotting import plot_error_spectrum, plot_sample
        plot_sample(a[0], b[0], stem.with_name(stem.name + "--sample0.png"))
        plot_error_spectrum(a, b, stem.with_name(stem.name + "--spectrum.png"))
    print(format_report_table(report), end="")
    print(f"report: {js}")
    return EXIT_OK


def build_inverse_config(args, pde: str) -> InverseConfig:
    data = _merge(_load_config(args.config), args, ("horizon", "learning_rate", "n_iterations",
                                                    "fd_epsilon", "n_test_samples", "optimizer"))
    data.setdefault("horizon", 5 if pde.startswith("cns") else 15)
    known = {f.name for f in fields(InverseConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown inverse config keys: {sorted(unknown)}")
    try:
        return InverseConfig(**data)
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e)) from None


def _inverse_one(job):
    gen_cfg, inv_cfg, u0, obs = job
    fwd = forward_map(gen_cfg, inv_cfg.horizon)
    grid = gen_cfg.grid()
    est = estimate_ic(obs, fwd, grid, inv_cfg)
    rep = evaluate_estimate(est, u0, obs, fwd, grid)
    return est, rep


def cmd_inverse(args) -> int:
    ds = read_dataset(args.truth)
    gen_cfg = GenerateConfig.from_meta(ds.meta).resolved()
    inv_cfg = build_inverse_config(args, gen_cfg.pde)
    forward_map(gen_cfg, inv_cfg.horizon)          # validates pde and horizon up front
    data = metric_array(ds)
    if data.shape[-1] != 1:
        raise ConfigError("inverse estimation needs single-channel data")
    n = min(inv_cfg.n_test_samples, data.shape[0])
    jobs = [(gen_cfg, inv_cfg, data[i, 0, :, 0], data[i, inv_cfg.horizon, :, 0]) for i in range(n)]
    workers = max(1, int(args.workers or 1))
    if workers == 1:
        results = [_inverse_one(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_inverse_one, jobs))
    report = mean_std_reports([r for _, r in results])
    report.metadata.update(truth=str(args.truth), horizon=inv_cfg.horizon,
                           learning_rate=inv_cfg.learning_rate, optimizer=inv_cfg.optimizer,
                           n_iterations=inv_cfg.n_iterations)
    out = _out_dir(args)
    stem = out / f"inverse--{Path(args.truth).stem}"
    js, _ = emit_report(report, stem)
    est0 = results[0][0]
    grid = gen_cfg.grid()
    np.save(stem.with_name(stem.name + "--controls.npy"),
            np.stack([e.params.control_values for e, _ in results]))
    if not args.no_plots:
        from .plotting import plot_inverse
        fwd = forward_map(gen_cfg, inv_cfg.horizon)
        u_est = reconstruct_ic(est0.params, grid).values[..., 0]
        plot_inverse(grid.centers(0), jobs[0][2], u_est, jobs[0][3], fwd(u_est[None])[0],
                     est0.best_trace, stem.with_name(stem.name + "--sample0.png"))
    print(format_report_table(report), end="")
    print(f"report: {js}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pdesuite", description="PDE benchmark data, metrics and inverse estimation")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="simulate samples and write one HDF5 dataset")
    g.add_argument("--config", help="YAML file with the same keys as the flags")
    g.add_argument("--pde")
    g.add_argument("--param", action="append", metavar="K=V", help="PDE parameter, repeatable")
    g.add_argument("--ns", type=int)
    g.add_argument("--nt", type=int)
    g.add_argument("--t-end", dest="t_end", type=float)
    g.add_argument("--samples", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--out")
    g.add_argument("--workers", type=int)
    g.add_argument("--precision", choices=("f32", "f64"))
    g.set_defaults(func=cmd_generate)

    e = sub.add_parser("evaluate", help="forward metrics of a prediction file against a truth file")
    e.add_argument("truth")
    e.add_argument("pred")
    e.add_argument("--out")
    e.add_argument("--no-plots", action="store_true")
    e.set_defaults(func=cmd_evaluate)

    i = sub.add_parser("inverse", help="estimate initial conditions from horizon snapshots")
    i.add_argument("truth")
    i.add_argument("--config")
    i.add_argument("--horizon", type=int)
    i.add_argument("--learning-rate", dest="learning_rate", type=float)
    i.add_argument("--n-iterations", dest="n_iterations", type=int)
    i.add_argument("--fd-epsilon", dest="fd_epsilon", type=float)
    i.add_argument("--n-test-samples", dest="n_test_samples", type=int)
    i.add_argument("--optimizer", choices=("adam", "gd"))
    i.add_argument("--workers", type=int)
    i.add_argument("--out")
    i.add_argument("--no-plots", action="store_true")
    i.set_defaults(func=cmd_inverse)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG if e.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except NumericalFailure as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, DatasetError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
