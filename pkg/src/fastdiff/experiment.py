"""Experiment runner: schedule inspection and metric sweeps.

A sweep walks the grid (schedule kind x variant x S x sampler x seed),
generates a batch per cell against the configured noise model, scores it,
and emits one row per cell.  Rows go to CSV (fixed, versioned column schema
with the config hash in a header comment) and JSON; wall-clock timings go to
a separate file because the CSV/JSON outputs are byte-identical across runs
of the same config.

Each cell draws from an isolated stream derived from (seed, cell index), so
adding cells or reordering the grid cannot perturb existing cells.
"""

from __future__ import annotations

import hashlib
import json
import os
import time

import numpy as np

from . import fast_schedule as fs
from .errors import ValidationError
from .metrics import frechet_distance, inception_score, accuracy
from .mixture import AnalyticEpsilonModel, GaussianMixture, posterior_classifier
from .regressor import ToyRegressor
from .rng import NoiseStream
from .samplers import (SamplerConfig, fast_ddim_reverse, fast_ddpm_reverse)
from .schedule import NoiseLevelMap, VarianceSchedule
from .storage import ensure_dir

CSV_SCHEMA_VERSION = 1
CSV_COLUMNS = ("seed", "kind", "variant", "S", "sampler", "kappa", "frechet",
               "inception_score", "accuracy", "model_calls_per_chain",
               "normals_per_chain", "status", "error")

_KINDS = ("step", "var")
_VARIANTS = ("linear", "quadratic")
_SAMPLERS = ("ddpm", "ddim")
# spawn key reserved for the per-seed reference sample set (cells use their
# grid index)
_REFERENCE_KEY = 0x5EED


def builtin_presets() -> dict[str, GaussianMixture]:
    eye2 = np.eye(2)
    return {
        "std_normal_2d": GaussianMixture([1.0], [[0.0, 0.0]], [eye2]),
        "two_blob_2d": GaussianMixture(
            [0.5, 0.5], [[-1.5, 0.0], [1.5, 0.0]],
            [0.25 * eye2, 0.25 * eye2], labels=[0, 1]),
        "four_class_2d": GaussianMixture(
            [0.25] * 4, [[-2.0, -2.0], [-2.0, 2.0], [2.0, -2.0], [2.0, 2.0]],
            [0.3 * eye2] * 4, labels=[0, 1, 2, 3]),
    }


class ExperimentConfig:
    """Validated sweep configuration; raises `ValidationError` eagerly."""

    def __init__(self, raw: dict):
        self.raw = raw
        try:
            self.schedule = VarianceSchedule.from_descriptor(raw["schedule"])
        except KeyError:
            raise ValidationError("config needs a 'schedule' descriptor")
        self.mixture = self._load_mixture(raw.get("data", {}))
        model = raw.get("model", {"kind": "analytic"})
        self.model_kind = model.get("kind", "analytic")
        if self.model_kind not in ("analytic", "trained"):
            raise ValidationError(f"unknown model kind {self.model_kind!r}")
        self.model_path = model.get("path")
        if self.model_kind == "trained" and not self.model_path:
            raise ValidationError("trained model requires a 'path'")

        sweep = raw.get("sweep")
        if not sweep:
            raise ValidationError("config needs a non-empty 'sweep' section")
        self.kinds = self._listed(sweep, "kinds", _KINDS)
        self.variants = self._listed(sweep, "variants", _VARIANTS)
        self.num_steps_list = list(sweep.get("num_steps", []))
        if not self.num_steps_list:
            raise ValidationError("sweep.num_steps must be non-empty")
        for s in self.num_steps_list:
            if not 1 <= int(s) <= self.schedule.num_steps:
                raise ValidationError(
                    f"sweep num_steps {s} outside [1, {self.schedule.num_steps}]")
        self.samplers = []
        for spec in sweep.get("samplers", []):
            name = spec.get("name")
            if name not in _SAMPLERS:
                raise ValidationError(f"unknown sampler {name!r}")
            kappa = float(spec.get("kappa", 0.0))
            if not 0.0 <= kappa <= 1.0:
                raise ValidationError(f"kappa {kappa} outside [0, 1]")
            self.samplers.append((name, kappa))
        if not self.samplers:
            raise ValidationError("sweep.samplers must be non-empty")

        self.seeds = [int(s) for s in raw.get("seeds", [])]
        if not self.seeds:
            raise ValidationError("config needs a non-empty 'seeds' list")
        self.samples_per_cell = int(raw.get("samples_per_cell", 2000))
        if self.samples_per_cell < self.mixture.dim + 1:
            raise ValidationError(
                f"samples_per_cell must be at least dim + 1 "
                f"= {self.mixture.dim + 1}")
        self.conditional = bool(raw.get("conditional", False))
        if self.conditional and self.mixture.labels is None:
            raise ValidationError("conditional sweep needs a labelled mixture")
        if self.conditional and self.model_kind != "analytic":
            raise ValidationError(
                "conditional sweep supports the analytic model only")
        self.final_step_noise = raw.get("final_step_noise", "zero")
        if self.final_step_noise not in ("zero", "literal"):
            raise ValidationError(
                f"final_step_noise must be 'zero' or 'literal', "
                f"got {self.final_step_noise!r}")

    @staticmethod
    def _listed(sweep, key, allowed):
        values = list(sweep.get(key, []))
        if not values:
            raise ValidationError(f"sweep.{key} must be non-empty")
        for v in values:
            if v not in allowed:
                raise ValidationError(f"sweep.{key} entry {v!r} not in {allowed}")
        return values

    @staticmethod
    def _load_mixture(data: dict) -> GaussianMixture:
        if "preset" in data:
            presets = builtin_presets()
            if data["preset"] not in presets:
                raise ValidationError(
                    f"unknown preset {data['preset']!r}; "
                    f"available: {sorted(presets)}")
            return presets[data["preset"]]
        if "path" in data:
            return GaussianMixture.from_json(data["path"])
        raise ValidationError("data section needs 'preset' or 'path'")

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls(json.load(fh))

    def config_hash(self) -> str:
        canonical = json.dumps(self.raw, sort_keys=True,
                               separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()[:16]

    def grid(self):
        """Cells in a fixed order; the enumeration index keys each cell's
        noise stream."""
        cells = []
        for seed in self.seeds:
            for kind in self.kinds:
                for variant in self.variants:
                    for s in self.num_steps_list:
                        for name, kappa in self.samplers:
                            cells.append((seed, kind, variant, int(s),
                                          name, kappa))
        return cells


def _cell_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=(index,))
               .generate_state(1, dtype=np.uint64)[0])


def build_fast_schedule(schedule, level_map, kind, variant, num_steps):
    if kind == "step":
        return fs.build_step_schedule(schedule, level_map, num_steps, variant)
    return fs.build_var_schedule(schedule, level_map, num_steps, variant)


def _generate(config, model, fast, sampler, kappa, batch, seed):
    sampler_config = SamplerConfig(
        dim=config.mixture.dim, batch=batch, seed=seed, kappa=kappa,
        final_step_noise=config.final_step_noise)
    if sampler == "ddpm":
        return fast_ddpm_reverse(fast, model, sampler_config)
    return fast_ddim_reverse(fast, model, sampler_config)


def _conditional_generate(config, level_map, fast, sampler, kappa, seed):
    """Round-robin class-conditional generation via per-class restricted
    mixtures; returns (samples, specified label indices)."""
    classes = config.mixture.class_labels()
    per_class = np.full(classes.size, config.samples_per_cell // classes.size)
    per_class[:config.samples_per_cell % classes.size] += 1
    chunks, labels, provenance = [], [], None
    for j, label in enumerate(classes):
        sub = config.mixture.restrict(int(label))
        model = AnalyticEpsilonModel(sub, level_map)
        sampler_config = SamplerConfig(
            dim=sub.dim, batch=int(per_class[j]),
            seed=_cell_seed(seed, j + 1), kappa=kappa,
            final_step_noise=config.final_step_noise)
        runner = fast_ddpm_reverse if sampler == "ddpm" else fast_ddim_reverse
        batch = runner(fast, model, sampler_config)
        chunks.append(batch.samples)
        labels.append(np.full(int(per_class[j]), j))
        provenance = batch.provenance
    return np.concatenate(chunks), np.concatenate(labels), provenance


def run_sweep(config: ExperimentConfig, out_dir: str | None = None):
    """Run every cell of the grid; returns the result rows.

    Per-cell numeric failures mark the row as failed and the sweep moves
    on; only config validation aborts the whole run (and it happens before
    this function is reachable).
    """
    level_map = NoiseLevelMap(config.schedule)
    if config.model_kind == "trained":
        model = ToyRegressor.load(config.model_path)
    else:
        model = AnalyticEpsilonModel(config.mixture, level_map)
    grid = config.grid()
    cells_per_seed = len(grid) // len(config.seeds)
    rows, timings = [], []
    references: dict[int, np.ndarray] = {}
    for index, (seed, kind, variant, s, sampler, kappa) in enumerate(grid):
        cell = index % cells_per_seed  # index within this seed's grid
        if seed not in references:
            ref_stream = NoiseStream(
                np.random.SeedSequence(seed, spawn_key=(_REFERENCE_KEY,)))
            references[seed] = config.mixture.sample(
                ref_stream, config.samples_per_cell)
        row = {"seed": seed, "kind": kind, "variant": variant, "S": s,
               "sampler": sampler, "kappa": kappa, "frechet": None,
               "inception_score": None, "accuracy": None,
               "model_calls_per_chain": None, "normals_per_chain": None,
               "status": "ok", "error": ""}
        started = time.perf_counter()
        try:
            fast = build_fast_schedule(config.schedule, level_map, kind,
                                       variant, s)
            if config.conditional:
                samples, label_idx, provenance = _conditional_generate(
                    config, level_map, fast, sampler, kappa,
                    _cell_seed(seed, cell))
            else:
                batch = _generate(config, model, fast, sampler, kappa,
                                  config.samples_per_cell,
                                  _cell_seed(seed, cell))
                samples, label_idx, provenance = batch.samples, None, \
                    batch.provenance
            row["frechet"] = frechet_distance(references[seed], samples)
            row["model_calls_per_chain"] = provenance["model_calls_per_chain"]
            row["normals_per_chain"] = provenance["normals_per_chain"]
            if config.mixture.labels is not None:
                probs = posterior_classifier(config.mixture, samples)
                row["inception_score"] = inception_score(probs)
                if label_idx is not None:
                    row["accuracy"] = accuracy(probs, label_idx)
        except Exception as err:  # per-cell isolation, by design
            row["status"] = "failed"
            row["error"] = f"{type(err).__name__}: {err}"
        timings.append({"cell": index, "seconds": time.perf_counter() - started})
        rows.append(row)

    if out_dir is not None:
        ensure_dir(out_dir)
        write_rows_csv(rows, os.path.join(out_dir, "results.csv"),
                       config.config_hash())
        with open(os.path.join(out_dir, "results.json"), "w") as fh:
            json.dump({"schema": CSV_SCHEMA_VERSION,
                       "config_hash": config.config_hash(),
                       "rows": rows}, fh, indent=2)
        with open(os.path.join(out_dir, "timings.json"), "w") as fh:
            json.dump(timings, fh, indent=2)
    return rows


def _csv_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_rows_csv(rows, path, config_hash: str) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# fastdiff-sweep schema={CSV_SCHEMA_VERSION} "
                 f"config={config_hash}\n")
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for row in rows:
            fh.write(",".join(_csv_value(row[c]) for c in CSV_COLUMNS) + "\n")


def inspect_schedule(descriptor: dict, kind: str, variant: str,
                     num_steps: int) -> dict:
    """Machine-readable dump of a shortened schedule, with diagnostics."""
    if kind not in _KINDS:
        raise ValidationError(f"kind must be one of {_KINDS}, got {kind!r}")
    if variant not in _VARIANTS:
        raise ValidationError(
            f"variant must be one of {_VARIANTS}, got {variant!r}")
    schedule = VarianceSchedule.from_descriptor(descriptor)
    level_map = NoiseLevelMap(schedule)
    fast = build_fast_schedule(schedule, level_map, kind, variant, num_steps)
    out = fast.to_dict()
    out["eta_tilde"] = fast.eta_tildes.tolist()
    if fast.is_step_kind:
        out["step_var_identity"] = fs.step_as_var_equivalence(fast, schedule)
    else:
        log_product = float(np.sum(np.log1p(-fast.etas)))
        log_target = float(np.sum(np.log1p(-schedule.betas)))
        out["constraint_residual"] = abs(log_product - log_target)
    return out


def format_schedule_dump(dump: dict) -> str:
    lines = [f"kind={dump['kind']} S={dump['S']}"]
    header = f"{'s':>4} {'r_s':>12} {'eta_s':>12} {'eta_tilde_s':>12} {'t_cont_s':>12}"
    if "tau" in dump:
        header += f" {'tau_s':>6}"
    lines.append(header)
    for i in range(dump["S"]):
        line = (f"{i + 1:>4} {dump['r'][i]:>12.6f} {dump['eta'][i]:>12.6f} "
                f"{dump['eta_tilde'][i]:>12.6f} {dump['t_cont'][i]:>12.4f}")
        if "tau" in dump:
            line += f" {dump['tau'][i]:>6}"
        lines.append(line)
    if "step_var_identity" in dump:
        lines.append(f"step-as-var identity: "
                     f"{'ok' if dump['step_var_identity'] else 'VIOLATED'}")
    if "constraint_residual" in dump:
        lines.append(f"variance-product constraint residual: "
                     f"{dump['constraint_residual']:.3e}")
    return "\n".join(lines)
