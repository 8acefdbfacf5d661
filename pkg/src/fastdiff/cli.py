"""Command-line experiment runner.

Verbs:
    inspect   print a shortened schedule (noise levels, variances,
              continuous steps) plus self-check diagnostics
    sample    generate a batch of samples and write it to disk
    evaluate  score a stored batch against the configured data distribution
    sweep     run the full (kind x variant x S x sampler x seed) grid

All verbs are driven by a JSON config (--config); `--preset` swaps in a
built-in data distribution, `--seed` overrides the config seed(s), and
`--out` (or the FASTDIFF_OUT environment variable) picks the output
directory.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .errors import ValidationError
from .experiment import (ExperimentConfig, builtin_presets,
                         build_fast_schedule, format_schedule_dump,
                         inspect_schedule, run_sweep, CSV_SCHEMA_VERSION)
from .metrics import MetricReport, frechet_distance, inception_score
from .mixture import AnalyticEpsilonModel, GaussianMixture, posterior_classifier
from .regressor import ToyRegressor
from .rng import NoiseStream
from .samplers import SamplerConfig, ddpm_reverse, fast_ddim_reverse, \
    fast_ddpm_reverse
from .schedule import NoiseLevelMap, VarianceSchedule
from .storage import ensure_dir, load_samples, samples_to_csv, save_samples

ENV_OUT = "FASTDIFF_OUT"


def _load_config(path) -> dict:
    if path is None:
        raise ValidationError("--config is required for this verb")
    with open(path) as fh:
        return json.load(fh)


def _resolve_out(args) -> str:
    out = args.out or os.environ.get(ENV_OUT)
    if out is None:
        raise ValidationError(
            f"no output directory: pass --out or set {ENV_OUT}")
    return ensure_dir(out)


def _mixture_from(raw: dict, preset: str | None) -> GaussianMixture:
    if preset is not None:
        presets = builtin_presets()
        if preset not in presets:
            raise ValidationError(
                f"unknown preset {preset!r}; available: {sorted(presets)}")
        return presets[preset]
    data = raw.get("data", {})
    if "preset" in data:
        return _mixture_from(raw, data["preset"])
    if "path" in data:
        return GaussianMixture.from_json(data["path"])
    raise ValidationError("config needs data.preset or data.path (or --preset)")


def _cmd_inspect(args):
    raw = _load_config(args.config)
    run = raw.get("run", {})
    kind = args.kind or run.get("kind")
    variant = args.variant or run.get("variant")
    num_steps = args.num_steps or run.get("S")
    if not all([kind, variant, num_steps]):
        raise ValidationError(
            "inspect needs kind/variant/S (config 'run' section or flags)")
    dump = inspect_schedule(raw["schedule"], kind, variant, int(num_steps))
    if args.json:
        print(json.dumps(dump, indent=2))
    else:
        print(format_schedule_dump(dump))
    return 0


def _build_model(raw, mixture, level_map):
    model_spec = raw.get("model", {"kind": "analytic"})
    if model_spec.get("kind", "analytic") == "trained":
        return ToyRegressor.load(model_spec["path"])
    return AnalyticEpsilonModel(mixture, level_map)


def _cmd_sample(args):
    raw = _load_config(args.config)
    run = raw.get("run")
    if not run:
        raise ValidationError("sample needs a 'run' section in the config")
    schedule = VarianceSchedule.from_descriptor(raw["schedule"])
    level_map = NoiseLevelMap(schedule)
    mixture = _mixture_from(raw, args.preset)
    model = _build_model(raw, mixture, level_map)
    seed = args.seed if args.seed is not None else int(run.get("seed", 0))
    config = SamplerConfig(
        dim=mixture.dim, batch=int(run.get("batch", 1000)), seed=seed,
        kappa=float(run.get("kappa", 0.0)),
        final_step_noise=run.get("final_step_noise", "zero"))
    kind = run.get("kind", "step")
    if kind == "full":
        batch = ddpm_reverse(schedule, model, config)
    else:
        fast = build_fast_schedule(schedule, level_map, kind,
                                   run.get("variant", "linear"),
                                   int(run["S"]))
        if run.get("sampler", "ddpm") == "ddim":
            batch = fast_ddim_reverse(fast, model, config)
        else:
            batch = fast_ddpm_reverse(fast, model, config)
    out = _resolve_out(args)
    prefix = os.path.join(out, "samples")
    save_samples(batch, prefix)
    if mixture.dim <= 16:
        samples_to_csv(batch, prefix + ".csv")
    print(f"wrote {batch.samples.shape[0]} samples to {prefix}.bin")
    return 0


def _cmd_evaluate(args):
    raw = _load_config(args.config)
    if args.samples is None:
        raise ValidationError("evaluate needs --samples <prefix>")
    batch = load_samples(args.samples)
    mixture = _mixture_from(raw, args.preset)
    seed = args.seed if args.seed is not None else 0
    reference = mixture.sample(NoiseStream.from_seed(seed),
                               max(batch.samples.shape[0], mixture.dim + 1))
    score = None
    if mixture.labels is not None:
        probs = posterior_classifier(mixture, batch.samples)
        score = inception_score(probs)
    provenance = batch.provenance
    report = MetricReport(
        frechet=frechet_distance(reference, batch.samples),
        inception_score=score, accuracy=None,
        num_generated=int(batch.samples.shape[0]),
        num_reference=int(reference.shape[0]),
        config={"sampler": provenance.get("sampler"),
                "kappa": provenance.get("kappa"),
                "seed": provenance.get("seed"),
                "schedule_kind": provenance.get(
                    "fast_schedule", {}).get("kind", "full"),
                "S": provenance.get("fast_schedule", {}).get(
                    "S", provenance.get("model_calls_per_chain"))})
    out = _resolve_out(args)
    report.to_json(os.path.join(out, "report.json"))
    cfg = report.config
    with open(os.path.join(out, "report.csv"), "w", newline="") as fh:
        fh.write("schedule_kind,S,sampler,kappa,seed,frechet,"
                 "inception_score,accuracy\n")
        fh.write(",".join("" if v is None else (repr(v) if isinstance(v, float)
                                                else str(v))
                          for v in (cfg["schedule_kind"], cfg["S"],
                                    cfg["sampler"], cfg["kappa"], cfg["seed"],
                                    report.frechet, report.inception_score,
                                    report.accuracy)) + "\n")
    print(f"frechet={report.frechet:.6f}"
          + (f" inception_score={score:.4f}" if score is not None else ""))
    return 0


def _cmd_sweep(args):
    raw = _load_config(args.config)
    if args.preset is not None:
        raw.setdefault("data", {})["preset"] = args.preset
        raw["data"].pop("path", None)
    if args.seed is not None:
        raw["seeds"] = [args.seed]
    config = ExperimentConfig(raw)
    out = _resolve_out(args)
    rows = run_sweep(config, out)
    failed = sum(1 for r in rows if r["status"] != "ok")
    print(f"{len(rows)} cells ({failed} failed) -> {out}/results.csv "
          f"[schema={CSV_SCHEMA_VERSION} config={config.config_hash()}]")
    return 0 if failed == 0 else 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fastdiff",
        description="few-step diffusion sampling experiments")
    sub = parser.add_subparsers(dest="verb", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config path")
    common.add_argument("--out", help=f"output directory (or ${ENV_OUT})")
    common.add_argument("--seed", type=int, help="seed override")
    common.add_argument("--preset", help="built-in data preset name")

    p_inspect = sub.add_parser("inspect", parents=[common],
                               help="dump a shortened schedule")
    p_inspect.add_argument("--kind", choices=("step", "var"))
    p_inspect.add_argument("--variant", choices=("linear", "quadratic"))
    p_inspect.add_argument("-S", "--num-steps", type=int, dest="num_steps")
    p_inspect.add_argument("--json", action="store_true",
                           help="machine-readable output")
    p_inspect.set_defaults(func=_cmd_inspect)

    p_sample = sub.add_parser("sample", parents=[common],
                              help="generate and store a sample batch")
    p_sample.set_defaults(func=_cmd_sample)

    p_eval = sub.add_parser("evaluate", parents=[common],
                            help="score a stored sample batch")
    p_eval.add_argument("--samples", help="prefix of a stored batch")
    p_eval.set_defaults(func=_cmd_evaluate)

    p_sweep = sub.add_parser("sweep", parents=[common],
                             help="run the full experiment grid")
    p_sweep.set_defaults(func=_cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, FileNotFoundError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
