"""Reproduction harness: degrade -> estimate -> restore -> evaluate.

Every stage reads and writes files under the configured output directory,
so stages can run separately or as one ``all`` pipeline.  A config plus a
seed determines every persisted byte; the only exception is
``restore/timings.log``, which records wall-clock data.

Exit codes: 0 success, 2 configuration error, 3 solver divergence,
4 I/O error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__
from .config import ConfigError, ExperimentConfig, dump_config, load_config
from .degrade import NoiseSpec, corrupt
from .fileio import (read_ggmap, read_image, read_sidecar, write_ggmap,
                     write_map_preview, write_png, write_sidecar)
from .ggd import ParamMaps, build_ratio_lookup, estimate_maps
from .metrics import bsnr, isnr
from .operators import apply_blur, build_spectrum, make_gaussian_psf
from .report import (RESULTS_COLUMNS, format_db, render_convergence_figure,
                     render_isnr_figure, write_results_table)
from .solver import Diagnostics, DivergenceError, SolverConfig, restore
from .testimages import is_builtin, load_builtin

STAGES = ("degrade", "estimate", "restore", "evaluate", "all")


def _load_original(cfg: ExperimentConfig) -> np.ndarray:
    if is_builtin(cfg.image):
        return load_builtin(cfg.image, cfg.image_size, cfg.image_size)
    u = read_image(cfg.image)
    if u.min() < 0.0 or u.max() > 1.0:
        raise ConfigError(f"input image {cfg.image} has values outside [0, 1]")
    return u


def _prepare_out(cfg: ExperimentConfig) -> str:
    out = cfg.out_dir
    os.makedirs(out, exist_ok=True)
    # snapshot records the run dir as '.', i.e. wherever the snapshot lives
    snapshot = dataclasses.replace(cfg, out_dir=".")
    with open(os.path.join(out, "config.ini"), "w", encoding="utf-8") as fh:
        fh.write(dump_config(snapshot))
    import matplotlib
    import PIL
    import scipy
    with open(os.path.join(out, "versions.txt"), "w", encoding="utf-8") as fh:
        fh.write(f"svtv={__version__}\n"
                 f"numpy={np.__version__}\n"
                 f"scipy={scipy.__version__}\n"
                 f"pillow={PIL.__version__}\n"
                 f"matplotlib={matplotlib.__version__}\n")
    return out


def _variant_label(variant: str, fidelity: int) -> str:
    return f"{variant}-L{fidelity}"


def run_degrade(cfg: ExperimentConfig) -> dict:
    """Blur and corrupt the input image; persist observation and metadata."""
    out = os.path.join(_prepare_out(cfg), "degrade")
    os.makedirs(out, exist_ok=True)
    u = _load_original(cfg)
    d1, d2 = u.shape
    kernel = make_gaussian_psf(cfg.band, cfg.blur_sigma)
    spec = build_spectrum(kernel, d1, d2, 1.0)
    blurred = apply_blur(u, spec)

    noise = NoiseSpec(kind=cfg.noise_kind, level=cfg.noise_level,
                      seed=cfg.seed, target_bsnr=cfg.target_bsnr)
    record = corrupt(blurred, noise)
    realized_bsnr = bsnr(record.observed, blurred)

    np.save(os.path.join(out, "blurred.npy"), blurred)
    write_png(os.path.join(out, "blurred.png"), blurred, depth=16)
    np.save(os.path.join(out, "observed.npy"), record.observed)
    write_png(os.path.join(out, "observed.png"), record.observed, depth=16)
    if record.mask is not None:
        np.save(os.path.join(out, "mask.npy"), record.mask)
        write_png(os.path.join(out, "mask.png"), record.mask.astype(float), depth=8)

    meta = {
        "image": cfg.image,
        "d1": d1, "d2": d2,
        "kind": record.kind,
        "level": record.level,
        "seed": record.seed,
        "rng": "philox4x32-10/numpy",
        "band": cfg.band,
        "blur_sigma": cfg.blur_sigma,
        "realized_bsnr": realized_bsnr,
    }
    if cfg.target_bsnr is not None:
        meta["target_bsnr"] = cfg.target_bsnr
    meta.update({f"realized_{k}": v for k, v in record.realized.items()})
    write_sidecar(os.path.join(out, "degrade.meta"), meta)
    print(f"degrade: wrote {out} (kind={record.kind} level={record.level:.6g} "
          f"BSNR={format_db(realized_bsnr)} dB)")
    return meta


def _read_degraded(cfg: ExperimentConfig):
    ddir = os.path.join(cfg.out_dir, "degrade")
    meta = read_sidecar(os.path.join(ddir, "degrade.meta"))
    observed = np.load(os.path.join(ddir, "observed.npy"))
    blurred = np.load(os.path.join(ddir, "blurred.npy"))
    mask = None
    if meta["kind"] == "spn":
        mask_path = os.path.join(ddir, "mask.npy")
        if not os.path.exists(mask_path):
            raise FileNotFoundError(f"missing corruption mask {mask_path}")
        mask = np.load(mask_path)
    return observed, blurred, mask, meta


def run_estimate(cfg: ExperimentConfig) -> ParamMaps:
    """Estimate shape/scale maps from the observed image; persist as GGMAP."""
    out = os.path.join(_prepare_out(cfg), "maps")
    os.makedirs(out, exist_ok=True)
    observed, _, mask, meta = _read_degraded(cfg)
    lut = build_ratio_lookup(cfg.p_min, cfg.lut_nodes)
    maps = estimate_maps(observed, meta["kind"], mask=mask, window=cfg.window,
                         p_min=cfg.p_min, alpha_max=cfg.alpha_max, lut=lut,
                         fill_threshold=cfg.fill_threshold)
    write_ggmap(os.path.join(out, "p.ggmap"), maps.shape, "p")
    write_ggmap(os.path.join(out, "alpha.ggmap"), maps.scale, "alpha")
    write_map_preview(os.path.join(out, "p.png"), maps.shape)
    write_map_preview(os.path.join(out, "alpha.png"), maps.scale)
    write_sidecar(os.path.join(out, "maps.meta"), {
        "window": maps.window,
        "p_min": maps.p_min,
        "alpha_max": maps.alpha_max,
        "global_shape": maps.global_shape,
        "source_kind": meta["kind"],
    })
    print(f"estimate: wrote {out} (window={maps.window} "
          f"global_shape={maps.global_shape:.4f})")
    return maps


def _read_maps(cfg: ExperimentConfig) -> ParamMaps:
    mdir = os.path.join(cfg.out_dir, "maps")
    shape, f1 = read_ggmap(os.path.join(mdir, "p.ggmap"))
    scale, f2 = read_ggmap(os.path.join(mdir, "alpha.ggmap"))
    if (f1, f2) != ("p", "alpha"):
        raise ConfigError(f"unexpected GGMAP fields {f1!r}/{f2!r} in {mdir}")
    meta = read_sidecar(os.path.join(mdir, "maps.meta"))
    return ParamMaps(shape=shape, scale=scale, window=int(meta["window"]),
                     global_shape=float(meta["global_shape"]),
                     p_min=float(meta["p_min"]),
                     alpha_max=float(meta["alpha_max"]))


def _noise_std(meta: dict) -> float | None:
    level = float(meta["level"])
    if meta["kind"] == "awgn":
        return level
    if meta["kind"] == "awln":
        return level * math.sqrt(2.0)
    return None


def _mu_grid(cfg: ExperimentConfig) -> np.ndarray:
    lo, hi, count = cfg.mu_grid
    return np.geomspace(lo, hi, int(count))


def _write_diagnostics(path: str, diag: Diagnostics, fmt: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        if fmt == "jsonl":
            for rec in diag.iterations:
                fh.write(json.dumps(rec) + "\n")
            fh.write(json.dumps({"termination": diag.termination,
                                 "converged": diag.converged,
                                 "iterations": len(diag.iterations)}) + "\n")
        else:
            for rec in diag.iterations:
                fh.write(" ".join(f"{k}={v!r}" if isinstance(v, float)
                                  else f"{k}={v}" for k, v in rec.items()) + "\n")
            fh.write(f"termination={diag.termination} "
                     f"converged={str(diag.converged).lower()} "
                     f"iterations={len(diag.iterations)}\n")


def run_restore(cfg: ExperimentConfig) -> list[dict]:
    """Restore with every configured variant; persist images and diagnostics."""
    out = os.path.join(_prepare_out(cfg), "restore")
    os.makedirs(out, exist_ok=True)
    observed, _, _, meta = _read_degraded(cfg)
    maps = _read_maps(cfg)
    original = _load_original(cfg)
    kernel = make_gaussian_psf(int(meta["band"]), float(meta["blur_sigma"]))
    fidelity = cfg.resolved_fidelity()
    n = observed.size

    rows: list[dict] = []
    timings: list[str] = []
    for variant in cfg.variants:
        label = _variant_label(variant, fidelity)
        base = SolverConfig(fidelity=fidelity, variant=variant,
                            pen_r=cfg.pen_r, pen_t=cfg.pen_t, tol=cfg.tol,
                            max_iter=cfg.max_iter,
                            p_global=cfg.p_global)
        t0 = time.perf_counter()
        if fidelity == 2 and cfg.mu is None:
            std = _noise_std(meta)
            if std is None:
                raise ConfigError(
                    "discrepancy mode needs a noise std; set solver mu for spn")
            base.noise_norm = cfg.tau * std * math.sqrt(n)
            mode = f"delta={base.noise_norm:.6g}"
            u_star, diag = _restore_or_dump(observed, kernel, maps, base,
                                            out, label, cfg.diag_format)
        elif fidelity == 1 and cfg.mu_sweep:
            best = None
            for mu in _mu_grid(cfg):
                trial = dataclasses.replace(base, mu=float(mu))
                u_trial, diag_trial = _restore_or_dump(
                    observed, kernel, maps, trial, out, label, cfg.diag_format)
                score = isnr(observed, original, u_trial)
                if best is None or score > best[0]:
                    best = (score, float(mu), u_trial, diag_trial)
            _, mu_best, u_star, diag = best
            mode = f"mu={mu_best:.6g} (sweep)"
        else:
            base.mu = cfg.mu
            mode = f"mu={cfg.mu:.6g}"
            u_star, diag = _restore_or_dump(observed, kernel, maps, base,
                                            out, label, cfg.diag_format)
        elapsed = time.perf_counter() - t0

        np.save(os.path.join(out, f"restored_{label}.npy"), u_star)
        write_png(os.path.join(out, f"restored_{label}.png"), u_star, depth=16)
        ext = "jsonl" if cfg.diag_format == "jsonl" else "kv"
        _write_diagnostics(os.path.join(out, f"diag_{label}.{ext}"), diag,
                           cfg.diag_format)
        row = {
            "variant": label,
            "mode": mode,
            "iterations": len(diag.iterations),
            "converged": diag.converged,
            "isnr_db": isnr(observed, original, u_star),
        }
        rows.append(row)
        timings.append(f"{label}\t{elapsed:.3f}s")
        print(f"restore: {label} {mode} iters={row['iterations']} "
              f"ISNR={format_db(row['isnr_db'])} dB ({elapsed:.2f}s)")

    with open(os.path.join(out, "summary.tsv"), "w", encoding="utf-8") as fh:
        fh.write("variant\tmode\titerations\tconverged\tisnr_db\n")
        for row in rows:
            fh.write(f"{row['variant']}\t{row['mode']}\t{row['iterations']}\t"
                     f"{str(row['converged']).lower()}\t"
                     f"{format_db(row['isnr_db'])}\n")
    with open(os.path.join(out, "timings.log"), "w", encoding="utf-8") as fh:
        fh.write("\n".join(timings) + "\n")
    return rows


def _restore_or_dump(observed, kernel, maps, scfg, out_dir, label, fmt):
    """Run one solve; persist partial diagnostics if it diverges."""
    try:
        return restore(observed, kernel, maps, scfg)
    except DivergenceError as exc:
        ext = "jsonl" if fmt == "jsonl" else "kv"
        _write_diagnostics(os.path.join(out_dir, f"diag_{label}.{ext}"),
                           exc.diagnostics, fmt)
        raise


def run_evaluate(cfg: ExperimentConfig) -> list[dict]:
    """Recompute metrics from persisted artifacts; write table and figures."""
    out = os.path.join(_prepare_out(cfg), "evaluate")
    os.makedirs(out, exist_ok=True)
    observed, blurred, _, meta = _read_degraded(cfg)
    original = _load_original(cfg)
    rdir = os.path.join(cfg.out_dir, "restore")
    fidelity = cfg.resolved_fidelity()
    observation_bsnr = bsnr(observed, blurred)

    rows = []
    traces: dict[str, list[float]] = {}
    labels, isnrs = [], []
    for variant in cfg.variants:
        label = _variant_label(variant, fidelity)
        restored = np.load(os.path.join(rdir, f"restored_{label}.npy"))
        value = isnr(observed, original, restored)
        rows.append({"image": os.path.basename(cfg.image),
                     "variant": label, "fidelity": fidelity,
                     "isnr_db": value, "bsnr_db": observation_bsnr})
        labels.append(label)
        isnrs.append(value)
        traces[label] = _read_relchange_trace(rdir, label, cfg.diag_format)

    write_results_table(os.path.join(out, "results.tsv"), rows)
    render_isnr_figure(os.path.join(out, "isnr_by_variant.png"), labels, isnrs)
    render_convergence_figure(os.path.join(out, "convergence.png"), traces)
    print(f"evaluate: wrote {out} ({len(rows)} rows, columns: "
          f"{', '.join(RESULTS_COLUMNS)})")
    return rows


def _read_relchange_trace(rdir: str, label: str, fmt: str) -> list[float]:
    ext = "jsonl" if fmt == "jsonl" else "kv"
    path = os.path.join(rdir, f"diag_{label}.{ext}")
    trace: list[float] = []
    if not os.path.exists(path):
        return trace
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if fmt == "jsonl":
                rec = json.loads(line)
                if "rel_change" in rec:
                    trace.append(float(rec["rel_change"]))
            elif line.startswith("iter="):
                fields = dict(tok.split("=", 1) for tok in line.split())
                trace.append(float(fields["rel_change"]))
    return trace


def run_all(cfg: ExperimentConfig) -> None:
    run_degrade(cfg)
    run_estimate(cfg)
    run_restore(cfg)
    run_evaluate(cfg)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="svtv",
        description="Space-variant TV restoration harness")
    parser.add_argument("stage", choices=STAGES)
    parser.add_argument("--config", required=True, help="experiment INI file")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the config seed")
    parser.add_argument("--out", default=None, help="override the output dir")
    parser.add_argument("--diag-format", choices=("kv", "jsonl"), default=None)
    parser.add_argument("--mu-sweep", action="store_true",
                        help="sweep mu on a log grid (fidelity 1)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.out is not None:
            cfg.out_dir = args.out
        if args.diag_format is not None:
            cfg.diag_format = args.diag_format
        if args.mu_sweep:
            cfg.mu_sweep = True
        cfg.validate()
        dispatch = {"degrade": run_degrade, "estimate": run_estimate,
                    "restore": run_restore, "evaluate": run_evaluate,
                    "all": run_all}
        dispatch[args.stage](cfg)
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DivergenceError as exc:
        print(f"solver divergence: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
