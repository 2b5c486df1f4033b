"""Command-line surface: compression, partition inspection, budget
planning, synthetic generation, and evaluation sweeps.

Flag precedence: built-in defaults < --config JSON file < explicit flags.
Exit codes: 0 success, 1 validation/usage error, 2 internal invariant
breach.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

import numpy as np

from . import _kernels
from .budget import budget_align
from .partition import dyseg_cuts, dyseg_partition
from .pipeline import Strategy, run_strategy
from .similarity import frame_embeddings, transition_similarities
from .synth import EvalReport, SynthSpec, evaluate, generate
from .tensor import (
    CompressionConfig,
    FlashvidError,
    InternalError,
    canonical_json,
    load_tensor,
    save_result,
    write_npy,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INTERNAL = 2

_CONFIG_FLAGS = {
    "merge_threshold": (float, "cosine merging threshold in (0,1]"),
    "adts_ratio": (float, "fraction of the budget taken by diverse selection, in [0,1]"),
    "expansion_factor": (float, "before-LLM tokens per average-per-layer token, >= 1"),
    "segment_threshold": (float, "partition cut threshold in (0,1]"),
    "min_segments": (int, "minimum number of video segments"),
    "prune_layer": (int, "inner pruning layer index (0 disables the feasibility check)"),
    "num_layers": (int, "number of transformer layers in the budget model"),
    "retention_ratio": (float, "average retained token fraction in (0,1]"),
    "budget": (int, "explicit output token budget (overrides retention math)"),
    "max_depth": (int, "max merge-tree depth (omit for unlimited)"),
    "neighborhood": (int, "max |pos delta| a merge link may span (omit for unlimited)"),
}

_FLAG_ALIASES = {
    "merge_threshold": "--merge-threshold",
    "adts_ratio": "--alpha",
    "expansion_factor": "--expansion",
    "segment_threshold": "--segment-threshold",
    "min_segments": "--min-segments",
    "prune_layer": "--prune-layer",
    "num_layers": "--layers",
    "retention_ratio": "--retention",
    "budget": "--budget",
    "max_depth": "--max-depth",
    "neighborhood": "--neighborhood",
}


def _add_config_flags(parser):
    parser.add_argument("--config", help="JSON file with config defaults")
    for name, (typ, help_text) in _CONFIG_FLAGS.items():
        parser.add_argument(
            _FLAG_ALIASES[name], dest=name, type=typ, default=None, help=help_text
        )


def build_config(args):
    """Merge defaults, --config file values, and explicit flags."""
    values = {}
    if getattr(args, "config", None):
        with open(args.config, "r", encoding="utf-8") as fh:
            file_cfg = json.load(fh)
        known = {f.name for f in dataclasses.fields(CompressionConfig)}
        unknown = set(file_cfg) - known
        if unknown:
            raise FlashvidError(f"unknown config keys in {args.config}: {sorted(unknown)}")
        values.update(file_cfg)
    for name in _CONFIG_FLAGS:
        flag = getattr(args, name, None)
        if flag is not None:
            values[name] = flag
    return CompressionConfig(**values)


def _apply_threads(args):
    threads = args.threads
    if threads is None:
        threads = int(os.environ.get("FLASHVID_THREADS", "0") or "0")
    if threads > 0 and _kernels.BACKEND == "numba":
        import numba

        numba.set_num_threads(min(threads, numba.config.NUMBA_NUM_THREADS))


def _load_inputs(args):
    features = load_tensor(args.features, kind="features")
    attn = None
    if getattr(args, "attention", None):
        attn = load_tensor(args.attention, kind="attention")
    return features, attn


def cmd_compress(args):
    config = build_config(args)
    features, attn = _load_inputs(args)
    result = run_strategy(Strategy(args.strategy), features, attn, config)
    stats = result.stats
    timings = stats.pop("timings")
    save_result(result, args.output, args.report, config=config)
    ratio = stats["output_tokens"] / stats["input_tokens"]
    stages = " ".join(
        f"{k}={timings[k] * 1e3:.1f}ms"
        for k in ("partition", "selection", "merging", "budget")
    )
    print(
        f"compressed {stats['input_tokens']} -> {stats['output_tokens']} tokens "
        f"(ratio {ratio:.4f}, budget {stats['budget']}) {stages}"
    )
    return EXIT_OK


def cmd_plan_budget(args):
    plan = budget_align(args.layers, args.prune_layer, args.expansion, args.avg_tokens)
    sys.stdout.write(canonical_json(plan.to_dict()))
    return EXIT_OK


def cmd_segment(args):
    features = load_tensor(args.features, kind="features")
    if features.frames > 1:
        transitions = transition_similarities(frame_embeddings(features))
    else:
        transitions = np.zeros(0)
    segments = dyseg_partition(transitions, args.segment_threshold, args.min_segments)
    cuts = dyseg_cuts(transitions, args.segment_threshold, args.min_segments)
    sys.stdout.write(
        canonical_json(
            {
                "frames": features.frames,
                "segments": [[s.start_frame, s.end_frame] for s in segments],
                "cuts": [
                    {"after_frame": c.after_frame, "reason": c.reason} for c in cuts
                ],
            }
        )
    )
    return EXIT_OK


def cmd_gen_synth(args):
    spec = SynthSpec(
        frames=args.frames,
        tokens_per_frame=args.tokens,
        dim=args.dim,
        num_entities=args.entities,
        drift_rate=args.drift,
        feature_noise_sigma=args.noise,
        scale_drift=(args.scale_min, args.scale_max),
        seed=args.seed,
    )
    features, attn = generate(spec)
    write_npy(args.out_features, features.data)
    if args.out_attention:
        write_npy(args.out_attention, attn.data)
    print(
        f"generated {spec.frames}x{spec.tokens_per_frame}x{spec.dim} "
        f"features (seed {spec.seed})"
    )
    return EXIT_OK


def cmd_eval(args):
    config = build_config(args)
    features, attn = _load_inputs(args)
    strategies = [Strategy(s.strip()) for s in args.strategies.split(",") if s.strip()]
    thresholds = (
        [float(t) for t in args.thresholds.split(",")]
        if args.thresholds
        else [config.merge_threshold]
    )
    combined = EvalReport(
        frames=features.frames,
        input_tokens=features.frames * features.tokens_per_frame,
    )
    for threshold in thresholds:
        cfg = dataclasses.replace(config, merge_threshold=threshold)
        combined.rows.extend(evaluate(strategies, features, attn, cfg).rows)
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        fh.write(combined.to_csv_text())
    if args.json_out:
        with open(args.json_out, "w", encoding="utf-8") as fh:
            fh.write(canonical_json(combined.to_dict()))
    print(
        f"evaluated {len(strategies)} strategies x {len(thresholds)} thresholds "
        f"-> {args.out}"
    )
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="flashvid",
        description="Training-free visual-token compression on feature tensors",
    )
    parser.add_argument(
        "--threads",
        type=int,
        default=None,
        help="worker cap for accelerated kernels (0 = auto; env FLASHVID_THREADS)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compress", help="compress a feature tensor")
    p.add_argument("--features", required=True, help="input features NPY (F x N_v x d)")
    p.add_argument("--attention", help="optional attention NPY (F x N_v x N_v); uniform if absent")
    p.add_argument("--output", required=True, help="output tokens NPY path")
    p.add_argument("--report", help="sidecar JSON report path (default: <output>.report.json)")
    p.add_argument(
        "--strategy",
        default="flashvid",
        choices=[s.value for s in Strategy],
    )
    _add_config_flags(p)
    p.set_defaults(func=cmd_compress)

    p = sub.add_parser("plan-budget", help="print the token budget plan as JSON")
    p.add_argument("--layers", type=int, required=True)
    p.add_argument("--prune-layer", type=int, required=True)
    p.add_argument("--expansion", type=float, default=1.25)
    p.add_argument("--avg-tokens", type=int, default=627)
    p.set_defaults(func=cmd_plan_budget)

    p = sub.add_parser("segment", help="print the video partition as JSON")
    p.add_argument("--features", required=True)
    p.add_argument("--segment-threshold", type=float, default=0.9)
    p.add_argument("--min-segments", type=int, default=8)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("gen-synth", help="generate a synthetic drifting clip")
    p.add_argument("--out-features", required=True)
    p.add_argument("--out-attention")
    p.add_argument("--frames", type=int, default=8)
    p.add_argument("--tokens", type=int, default=24)
    p.add_argument("--dim", type=int, default=16)
    p.add_argument("--entities", type=int, default=3)
    p.add_argument("--drift", type=float, default=1.0)
    p.add_argument("--noise", type=float, default=0.02)
    p.add_argument("--scale-min", type=float, default=1.0)
    p.add_argument("--scale-max", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gen_synth)

    p = sub.add_parser("eval", help="sweep strategies and write the CSV report")
    p.add_argument("--features", required=True)
    p.add_argument("--attention")
    p.add_argument("--strategies", default="flashvid,ttm_only")
    p.add_argument("--thresholds", help="comma-separated merge thresholds to sweep")
    p.add_argument("--out", required=True, help="CSV output path")
    p.add_argument("--json-out", help="optional JSON report path")
    _add_config_flags(p)
    p.set_defaults(func=cmd_eval)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_threads(args)
        return args.func(args)
    except InternalError as exc:
        print(f"flashvid: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except (FlashvidError, OSError, ValueError) as exc:
        print(f"flashvid: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
