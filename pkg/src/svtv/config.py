"""Declarative experiment configuration.

One INI file with flat key=value sections per stage drives the whole
harness, so experiments are diffable and re-runnable.  Section defaults
mirror the library defaults; anything omitted falls back here.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass


class ConfigError(Exception):
    """Invalid or inconsistent experiment configuration."""


@dataclass
class ExperimentConfig:
    # [experiment]
    image: str = "builtin:geometric"
    image_size: int = 64
    out_dir: str = "run"
    seed: int = 0
    variants: tuple[str, ...] = ("tv", "tvp", "tvp-sv", "tvpa-sv")
    diag_format: str = "kv"
    # [blur]
    band: int = 5
    blur_sigma: float = 1.0
    # [noise]
    noise_kind: str = "awgn"
    noise_level: float | None = None
    target_bsnr: float | None = None
    # [maps]
    window: int = 3
    p_min: float = 0.1
    alpha_max: float = 1e4
    lut_nodes: int = 4096
    fill_threshold: float = 0.4
    # [solver]
    fidelity: str = "auto"
    pen_r: float = 50.0
    pen_t: float = 10.0
    mu: float | None = None
    tau: float = 1.0
    tol: float = 1e-4
    max_iter: int = 500
    p_global: float | None = None
    mu_sweep: bool = False
    mu_grid: tuple[float, float, int] = (1e-1, 1e3, 15)

    def resolved_fidelity(self) -> int:
        if self.fidelity == "auto":
            return 2 if self.noise_kind == "awgn" else 1
        return int(self.fidelity)

    def validate(self) -> None:
        if not self.variants:
            raise ConfigError("variant list is empty")
        from .solver import VARIANTS
        for v in self.variants:
            if v not in VARIANTS:
                raise ConfigError(f"unknown variant {v!r}; choose from {VARIANTS}")
        if self.noise_kind not in ("awgn", "awln", "spn"):
            raise ConfigError(f"unknown noise kind {self.noise_kind!r}")
        if self.noise_level is None and self.target_bsnr is None:
            raise ConfigError("noise needs either level or target_bsnr")
        if self.noise_kind == "spn" and self.noise_level is None:
            raise ConfigError("spn noise needs an explicit probability level")
        if self.fidelity not in ("auto", "1", "2"):
            raise ConfigError(f"fidelity must be auto, 1 or 2, got {self.fidelity!r}")
        if self.diag_format not in ("kv", "jsonl"):
            raise ConfigError(f"diag_format must be kv or jsonl, got {self.diag_format!r}")
        if self.resolved_fidelity() == 1 and self.mu is None and not self.mu_sweep:
            raise ConfigError("fidelity 1 needs a fixed mu or mu_sweep=true")


_SECTIONS = {
    "experiment": {"image": str, "image_size": int, "out_dir": str, "seed": int,
                   "variants": "list", "diag_format": str},
    "blur": {"band": int, "sigma": ("blur_sigma", float)},
    "noise": {"kind": ("noise_kind", lambda s: s.lower()),
              "level": ("noise_level", float), "target_bsnr": float},
    "maps": {"window": int, "p_min": float, "alpha_max": float,
             "lut_nodes": int, "fill_threshold": float},
    "solver": {"fidelity": str, "beta_r": ("pen_r", float),
               "beta_t": ("pen_t", float), "mu": float, "tau": float,
               "tol": float, "max_iter": int, "p_global": float,
               "mu_sweep": "bool", "mu_grid": "grid"},
}


def load_config(path: str) -> ExperimentConfig:
    """Parse an INI experiment file into an :class:`ExperimentConfig`."""
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    cfg = ExperimentConfig()
    try:
        for section, keys in _SECTIONS.items():
            if not parser.has_section(section):
                continue
            for key, spec in keys.items():
                if not parser.has_option(section, key):
                    continue
                raw = parser.get(section, key).strip()
                if not raw:
                    continue
                attr, conv = (spec if isinstance(spec, tuple) else (key, spec))
                if conv == "list":
                    value = tuple(tok.strip() for tok in raw.split(",") if tok.strip())
                elif conv == "bool":
                    value = raw.lower() in ("1", "true", "yes", "on")
                elif conv == "grid":
                    parts = [tok.strip() for tok in raw.split(",")]
                    if len(parts) != 3:
                        raise ConfigError(f"mu_grid needs 'min,max,count', got {raw!r}")
                    value = (float(parts[0]), float(parts[1]), int(parts[2]))
                else:
                    value = conv(raw)
                setattr(cfg, attr, value)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"bad value in {path}: {exc}") from exc
    cfg.validate()
    return cfg


def dump_config(cfg: ExperimentConfig) -> str:
    """Canonical INI rendition of a resolved configuration."""
    opt = lambda v: "" if v is None else v
    lines = [
        "[experiment]",
        f"image = {cfg.image}",
        f"image_size = {cfg.image_size}",
        f"out_dir = {cfg.out_dir}",
        f"seed = {cfg.seed}",
        f"variants = {', '.join(cfg.variants)}",
        f"diag_format = {cfg.diag_format}",
        "",
        "[blur]",
        f"band = {cfg.band}",
        f"sigma = {cfg.blur_sigma!r}",
        "",
        "[noise]",
        f"kind = {cfg.noise_kind}",
        f"level = {opt(cfg.noise_level)}",
        f"target_bsnr = {opt(cfg.target_bsnr)}",
        "",
        "[maps]",
        f"window = {cfg.window}",
        f"p_min = {cfg.p_min!r}",
        f"alpha_max = {cfg.alpha_max!r}",
        f"lut_nodes = {cfg.lut_nodes}",
        f"fill_threshold = {cfg.fill_threshold!r}",
        "",
        "[solver]",
        f"fidelity = {cfg.fidelity}",
        f"beta_r = {cfg.pen_r!r}",
        f"beta_t = {cfg.pen_t!r}",
        f"mu = {opt(cfg.mu)}",
        f"tau = {cfg.tau!r}",
        f"tol = {cfg.tol!r}",
        f"max_iter = {cfg.max_iter}",
        f"p_global = {opt(cfg.p_global)}",
        f"mu_sweep = {str(cfg.mu_sweep).lower()}",
        f"mu_grid = {cfg.mu_grid[0]!r}, {cfg.mu_grid[1]!r}, {cfg.mu_grid[2]}",
        "",
    ]
    return "\n".join(lines)
