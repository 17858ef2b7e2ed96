"""Experiment harness: config parsing, seeded sweeps, and result emission.

Configs are plain ``key: value`` text (``#`` starts a comment).  Every dB
quantity is converted to watts once at parse time, and all randomness is
drawn from counter-based generators keyed by (seed, sweep index), so a
run is a pure function of (config, seeds) regardless of worker count.

See the schema table in the README (or CONFIG_SCHEMA below) for every
key, its unit, and the desk/paper defaults.
"""

from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from .channel import MODEL_TAGS, synthesize_channel
from .codebook import SamplingGrid
from .geometry import SPEED_OF_LIGHT, SystemGeometry
from .optimizer import ao_loop
from .training import TrainingBudget

TRAINING_SCHEMES = ("auto", "angular", "hierarchical", "two_stage")

SWEEPABLE = ("power_dbm", "noise_dbm", "ris_x", "ris_y", "ris_z",
             "m_x", "m_y", "n_bs", "n_ue", "layers", "s_x", "s_y",
             "range_halfwidth_wl")

_INT_KEYS = ("n_bs", "n_ue", "m_x", "m_y", "layers", "s_x", "s_y",
             "paths_bs", "paths_ue", "max_iters", "workers", "q")

# key -> (unit, desk default, paper default)
# Desk defaults shrink the reference layout by 1/100 and drop the transmit
# power by the 80 dB of cascaded gain that the shorter links add, keeping
# the operating SNR (and therefore rates and convergence behavior)
# comparable to the reference scale while runs finish in CI time.
CONFIG_SCHEMA = {
    "carrier_hz": ("Hz", 30e9, 30e9),
    "spacing_wavelengths": ("multiples of the wavelength", 0.5, 0.5),
    "n_bs": ("antennas", 8, 16),
    "n_ue": ("antennas", 4, 8),
    "m_x": ("elements", 16, 60),
    "m_y": ("elements", 2, 2),
    "bs_pos_m": ("m, [x,y,z]", [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]),
    "ue_pos_m": ("m, [x,y,z]", [0.24, 0.0, 0.0], [24.0, 0.0, 0.0]),
    "ris_pos_m": ("m, [x,y,z]", [0.1, 0.0, 0.08], [10.0, 0.0, 8.0]),
    "model": ("FF|NF|FN|NN", "NN", "NN"),
    "training": ("auto|angular|hierarchical|two_stage", "auto", "auto"),
    "layers": ("refinement layers", 6, 12),
    "s_x": ("samples per direction", 2, 2),
    "s_y": ("samples per direction", 2, 2),
    "range_halfwidth_wl": ("multiples of the wavelength", 10.0, 1000.0),
    "ue_jitter_frac": ("fraction of the range halfwidth", 0.05, 0.05),
    "power_dbm": ("dBm", -50.0, 30.0),
    "noise_dbm": ("dBm", -105.0, -105.0),
    "paths_bs": ("paths incl. LoS", 3, 3),
    "paths_ue": ("paths incl. LoS", 3, 3),
    "nlos_rel_power": ("relative to LoS power", 0.01, 0.01),
    "gain_mode": ("friis|unit", "friis", "friis"),
    "q": ("streams, 0 = auto", 0, 0),
    "max_iters": ("iterations", 20, 20),
    "tol": ("relative rate change", 1e-4, 1e-4),
    "seeds": ("list, or a count expanded to 0..n-1", 20, 20),
    "workers": ("processes", 1, 1),
    "timing": ("true|false; true breaks byte determinism", False, False),
    "json_mirror": ("true|false", False, False),
    "sweep": ("'<name> in [v1, v2, ...]'", None, None),
    "out": ("output CSV path", "results.csv", "results.csv"),
}

RESULT_HEADER = ("seed", "sweep_param", "sweep_value", "model",
                 "rate_bps_hz", "evaluations", "iterations", "ms")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    carrier_hz: float
    spacing_wavelengths: float
    n_bs: int
    n_ue: int
    m_x: int
    m_y: int
    bs_pos_m: tuple
    ue_pos_m: tuple
    ris_pos_m: tuple
    model: str
    training: str
    layers: int
    s_x: int
    s_y: int
    range_halfwidth_wl: float
    ue_jitter_frac: float
    power_dbm: float
    noise_dbm: float
    p_max_w: float
    noise_w: float
    paths_bs: int
    paths_ue: int
    nlos_rel_power: float
    gain_mode: str
    q: int
    max_iters: int
    tol: float
    seeds: tuple
    workers: int
    timing: bool
    json_mirror: bool
    sweep_param: str
    sweep_values: tuple
    out: str


@dataclass(frozen=True)
class ResultRow:
    seed: int
    sweep_param: str
    sweep_value: float
    model: str
    rate_bps_hz: float
    evaluations: int
    iterations: int
    ms: float


@dataclass
class ExperimentResult:
    rows: list[ResultRow]
    summary: list[tuple]          # (sweep_param, sweep_value, model, mean, std, n)
    errors: list[str]


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def rng_for(seed: int, cell_index: int) -> np.random.Generator:
    """Counter-based stream keyed by (seed, cell); scheduling independent."""
    key = np.array([np.uint64(seed), np.uint64(cell_index)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _parse_scalar(text: str):
    text = text.strip()
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def _parse_list(text: str, lineno: int) -> list:
    text = text.strip()
    if not (text.startswith("[") and text.endswith("]")):
        raise ConfigError(f"line {lineno}: expected a [..] list, got {text!r}")
    body = text[1:-1].strip()
    if not body:
        return []
    return [_parse_scalar(tok) for tok in body.split(",")]


def _parse_sweep(text: str, lineno: int) -> tuple[str, tuple]:
    parts = text.split(" in ", 1)
    if len(parts) != 2:
        raise ConfigError(
            f"line {lineno}: sweep must look like '<name> in [v1, v2, ...]'")
    name = parts[0].strip()
    if name not in SWEEPABLE:
        raise ConfigError(
            f"line {lineno}: unknown sweep parameter {name!r}; "
            f"choose one of {', '.join(SWEEPABLE)}")
    values = _parse_list(parts[1], lineno)
    if not values or not all(isinstance(v, (int, float)) for v in values):
        raise ConfigError(f"line {lineno}: sweep values must be numeric")
    return name, tuple(float(v) for v in values)


def scale_defaults(scale: str) -> dict:
    if scale not in ("desk", "paper"):
        raise ConfigError(f"unknown scale {scale!r}; use 'desk' or 'paper'")
    idx = 1 if scale == "desk" else 2
    return {key: spec[idx] for key, spec in CONFIG_SCHEMA.items()
            if key != "sweep"}


def parse_config(text: str, scale: str = "desk") -> ExperimentConfig:
    """Parse a key/value config document on top of the scale's defaults."""
    values = scale_defaults(scale)
    sweep: tuple[str, tuple] | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" not in line:
            raise ConfigError(f"line {lineno}: expected 'key: value', got {raw!r}")
        key, _, val = line.partition(":")
        key = key.strip()
        val = val.strip()
        if key == "sweep":
            if sweep is not None:
                raise ConfigError(
                    f"line {lineno}: multiple sweep parameters; only one allowed")
            sweep = _parse_sweep(val, lineno)
            continue
        if key not in CONFIG_SCHEMA:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in ("bs_pos_m", "ue_pos_m", "ris_pos_m"):
            vec = _parse_list(val, lineno)
            if len(vec) != 3 or not all(isinstance(v, (int, float)) for v in vec):
                raise ConfigError(f"line {lineno}: {key} must be [x, y, z]")
            values[key] = [float(v) for v in vec]
        elif key == "seeds":
            if val.startswith("["):
                seeds = _parse_list(val, lineno)
                if not seeds or not all(isinstance(s, int) and s >= 0 for s in seeds):
                    raise ConfigError(
                        f"line {lineno}: seeds must be nonnegative integers")
                values[key] = seeds
            else:
                values[key] = _parse_scalar(val)
        else:
            values[key] = _parse_scalar(val)
        _check_value(key, values[key], lineno)

    seeds = values["seeds"]
    if isinstance(seeds, int):
        if seeds < 1:
            raise ConfigError("seeds count must be >= 1")
        seeds = list(range(seeds))
    sweep_param, sweep_values = sweep if sweep is not None else ("none", (0.0,))

    return ExperimentConfig(
        carrier_hz=float(values["carrier_hz"]),
        spacing_wavelengths=float(values["spacing_wavelengths"]),
        n_bs=int(values["n_bs"]), n_ue=int(values["n_ue"]),
        m_x=int(values["m_x"]), m_y=int(values["m_y"]),
        bs_pos_m=tuple(values["bs_pos_m"]),
        ue_pos_m=tuple(values["ue_pos_m"]),
        ris_pos_m=tuple(values["ris_pos_m"]),
        model=str(values["model"]),
        training=str(values["training"]),
        layers=int(values["layers"]),
        s_x=int(values["s_x"]), s_y=int(values["s_y"]),
        range_halfwidth_wl=float(values["range_halfwidth_wl"]),
        ue_jitter_frac=float(values["ue_jitter_frac"]),
        power_dbm=float(values["power_dbm"]),
        noise_dbm=float(values["noise_dbm"]),
        p_max_w=dbm_to_watts(float(values["power_dbm"])),
        noise_w=dbm_to_watts(float(values["noise_dbm"])),
        paths_bs=int(values["paths_bs"]), paths_ue=int(values["paths_ue"]),
        nlos_rel_power=float(values["nlos_rel_power"]),
        gain_mode=str(values["gain_mode"]),
        q=int(values["q"]),
        max_iters=int(values["max_iters"]),
        tol=float(values["tol"]),
        seeds=tuple(int(s) for s in seeds),
        workers=int(values["workers"]),
        timing=bool(values["timing"]),
        json_mirror=bool(values["json_mirror"]),
        sweep_param=sweep_param,
        sweep_values=sweep_values,
        out=str(values["out"]),
    )


def _check_value(key: str, value, lineno: int) -> None:
    def fail(msg):
        raise ConfigError(f"line {lineno}: {msg}")

    if key in _INT_KEYS:
        if not isinstance(value, int):
            fail(f"{key} must be an integer")
        if key in ("layers", "q") and value < 0:
            fail(f"{key} must be >= 0")
        if key not in ("layers", "q") and value < 1:
            fail(f"{key} must be >= 1")
    elif key in ("carrier_hz", "spacing_wavelengths", "range_halfwidth_wl",
                 "nlos_rel_power", "tol"):
        if not isinstance(value, (int, float)) or value <= 0:
            fail(f"{key} must be a positive number")
    elif key == "ue_jitter_frac":
        if not isinstance(value, (int, float)) or value < 0:
            fail(f"{key} must be >= 0")
    elif key in ("power_dbm", "noise_dbm"):
        if not isinstance(value, (int, float)):
            fail(f"{key} must be a number in dBm")
    elif key == "model":
        if value not in MODEL_TAGS:
            fail(f"model must be one of {', '.join(MODEL_TAGS)}")
    elif key == "training":
        if value not in TRAINING_SCHEMES:
            fail(f"training must be one of {', '.join(TRAINING_SCHEMES)}")
    elif key == "gain_mode":
        if value not in ("friis", "unit"):
            fail("gain_mode must be 'friis' or 'unit'")
    elif key in ("timing", "json_mirror"):
        if not isinstance(value, bool):
            fail(f"{key} must be true or false")


def load_config(path, scale: str = "desk") -> ExperimentConfig:
    return parse_config(Path(path).read_text(), scale=scale)


def apply_sweep(cfg: ExperimentConfig, value: float) -> ExperimentConfig:
    """Override the swept parameter with one sweep value."""
    name = cfg.sweep_param
    if name == "none":
        return cfg
    if name in ("m_x", "m_y", "n_bs", "n_ue", "layers", "s_x", "s_y"):
        if value != int(value):
            raise ConfigError(f"sweep value {value} for {name} must be an integer")
        return replace(cfg, **{name: int(value)})
    if name == "power_dbm":
        return replace(cfg, power_dbm=value, p_max_w=dbm_to_watts(value))
    if name == "noise_dbm":
        return replace(cfg, noise_dbm=value, noise_w=dbm_to_watts(value))
    if name in ("ris_x", "ris_y", "ris_z"):
        axis = {"ris_x": 0, "ris_y": 1, "ris_z": 2}[name]
        pos = list(cfg.ris_pos_m)
        pos[axis] = value
        return replace(cfg, ris_pos_m=tuple(pos))
    if name == "range_halfwidth_wl":
        return replace(cfg, range_halfwidth_wl=value)
    raise ConfigError(f"unknown sweep parameter {name!r}")


def geometry_from(cfg: ExperimentConfig,
                  ue_offset=(0.0, 0.0)) -> SystemGeometry:
    ue = np.asarray(cfg.ue_pos_m, dtype=float)
    ue = ue + np.array([ue_offset[0], ue_offset[1], 0.0])
    return SystemGeometry.build(
        carrier_hz=cfg.carrier_hz, n_bs=cfg.n_bs, n_ue=cfg.n_ue,
        m_x=cfg.m_x, m_y=cfg.m_y, bs_mid=cfg.bs_pos_m, ue_mid=ue,
        ris_mid=cfg.ris_pos_m, spacing_wavelengths=cfg.spacing_wavelengths)


def grids_from(cfg: ExperimentConfig, geometry: SystemGeometry):
    """Sample grids centered at the nominal node positions.

    The user grid is centered at the configured (pre-jitter) position:
    training must not see the realized location.
    """
    half = cfg.range_halfwidth_wl * geometry.wavelength_m
    def grid(center):
        return SamplingGrid(x_min=center[0] - half, x_max=center[0] + half,
                            y_min=center[1] - half, y_max=center[1] + half,
                            s_x=cfg.s_x, s_y=cfg.s_y, fixed_z=center[2])
    return grid(cfg.bs_pos_m), grid(cfg.ue_pos_m)


def run_cell(cfg: ExperimentConfig, seed: int, sweep_index: int,
             sweep_value: float) -> ResultRow:
    """One (seed, sweep value) cell: synthesize, optimize, report."""
    cell = apply_sweep(cfg, sweep_value)
    rng = rng_for(seed, sweep_index)
    t0 = time.perf_counter()
    jitter = cell.ue_jitter_frac * cell.range_halfwidth_wl
    lam_offsets = rng.uniform(-jitter, jitter, size=2)
    wavelength = SPEED_OF_LIGHT / cell.carrier_hz
    geometry = geometry_from(cell, ue_offset=tuple(lam_offsets * wavelength))
    realization = synthesize_channel(
        cell.model, geometry, rng, n_paths_bs=cell.paths_bs,
        n_paths_ue=cell.paths_ue, nlos_rel_power=cell.nlos_rel_power,
        gain_mode=cell.gain_mode)
    grid_bs, grid_ue = grids_from(cell, geometry)
    state = ao_loop(
        realization, geometry, p_max=cell.p_max_w, noise_var=cell.noise_w,
        grid_bs=grid_bs, grid_ue=grid_ue,
        budget=TrainingBudget(max_layers=cell.layers, s_x=cell.s_x,
                              s_y=cell.s_y),
        max_iters=cell.max_iters, tol=cell.tol, scheme=cell.training,
        q=cell.q if cell.q > 0 else None,
        l_b=cell.paths_bs, l_u=cell.paths_ue)
    ms = (time.perf_counter() - t0) * 1000.0
    return ResultRow(seed=seed, sweep_param=cfg.sweep_param,
                     sweep_value=float(sweep_value), model=cell.model,
                     rate_bps_hz=state.rate, evaluations=state.evaluations,
                     iterations=state.iterations, ms=ms)


def _cell_job(args):
    cfg, seed, sweep_index, sweep_value = args
    try:
        return run_cell(cfg, seed, sweep_index, sweep_value), None
    except Exception as exc:  # recorded, not fatal
        row = ResultRow(seed=seed, sweep_param=cfg.sweep_param,
                        sweep_value=float(sweep_value), model=cfg.model,
                        rate_bps_hz=float("nan"), evaluations=0,
                        iterations=0, ms=0.0)
        return row, f"seed={seed} sweep_value={sweep_value}: {exc}"


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """All (seed x sweep value) cells, merged in deterministic order."""
    jobs = [(cfg, seed, vi, value)
            for vi, value in enumerate(cfg.sweep_values)
            for seed in cfg.seeds]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            outcomes = list(pool.map(_cell_job, jobs))
    else:
        outcomes = [_cell_job(job) for job in jobs]

    rows = [row for row, _ in outcomes]
    errors = [err for _, err in outcomes if err is not None]

    summary = []
    per_value = len(cfg.seeds)
    for vi, value in enumerate(cfg.sweep_values):
        rates = np.array([r.rate_bps_hz
                          for r in rows[vi * per_value:(vi + 1) * per_value]])
        summary.append((cfg.sweep_param, float(value), cfg.model,
                        float(np.mean(rates)), float(np.std(rates)),
                        int(rates.size)))
    return ExperimentResult(rows=rows, summary=summary, errors=errors)


def emit_results(result: ExperimentResult, path, timing: bool = False,
                 json_mirror: bool = False) -> None:
    """Write the result CSV (plus summary CSV and optional JSON mirror).

    Reals are written with 12 significant digits.  Unless timing is
    enabled the ms column is written as 0 so that reruns of the same
    config are byte-identical.
    """
    path = Path(path)
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(RESULT_HEADER)
            for r in result.rows:
                ms = f"{r.ms:.12g}" if timing else "0"
                writer.writerow([r.seed, r.sweep_param,
                                 f"{r.sweep_value:.12g}", r.model,
                                 f"{r.rate_bps_hz:.12g}", r.evaluations,
                                 r.iterations, ms])
        summary_path = path.with_suffix(".summary.csv")
        with open(summary_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["sweep_param", "sweep_value", "model",
                             "mean_rate_bps_hz", "std_rate_bps_hz", "n"])
            for param, value, model, mean, std, n in result.summary:
                writer.writerow([param, f"{value:.12g}", model,
                                 f"{mean:.12g}", f"{std:.12g}", n])
        if json_mirror:
            doc = {"rows": [asdict(r) for r in result.rows],
                   "errors": result.errors}
            with open(f"{path}.json", "w") as fh:
                json.dump(doc, fh, indent=1)
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc


def parse_result_csv(path) -> list[ResultRow]:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != RESULT_HEADER:
            raise ValueError(f"unexpected result header in {path}: {header}")
        for rec in reader:
            rows.append(ResultRow(
                seed=int(rec[0]), sweep_param=rec[1],
                sweep_value=float(rec[2]), model=rec[3],
                rate_bps_hz=float(rec[4]), evaluations=int(rec[5]),
                iterations=int(rec[6]), ms=float(rec[7])))
    return rows
