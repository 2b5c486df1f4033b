"""Adapter operations: thin wrappers delegating to the flashvid public API."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

import flashvid


@dataclass(frozen=True)
class AdapterResult:
    """Compression output on host memory.

    ``tokens`` is the float32 (M, d) output matrix; ``provenance`` holds,
    per output token, the sorted ``(frame, position)`` pairs of the input
    tokens pooled into it; ``stats`` is the pipeline's stats mapping.
    """

    tokens: np.ndarray
    provenance: tuple[tuple[tuple[int, int], ...], ...]
    stats: dict


def _ingest(array, *, name, validator):
    arr = np.asarray(array)  # buffer protocol, zero-copy for ndarray input
    if arr.dtype != np.float32:
        raise TypeError(
            f"{name} must be float32, got {arr.dtype}; cast explicitly "
            f"(e.g. array.astype(numpy.float32)) — silent casts would break "
            f"parity with the CLI"
        )
    return validator(np.ascontiguousarray(arr))


def compress(features, attention=None, *, strategy="flashvid", **config):
    """Compress an (F, N_v, d) float32 feature tensor in memory.

    ``attention`` is an optional (F, N_v, N_v) row-stochastic float32
    stack; uniform attention is used when absent. ``config`` accepts the
    same keywords as the CLI flags (merge_threshold, adts_ratio,
    expansion_factor, segment_threshold, min_segments, prune_layer,
    num_layers, retention_ratio, budget, max_depth, neighborhood,
    aggregation).
    """
    feats = _ingest(
        features, name="features", validator=flashvid.VideoFeatures.from_array
    )
    attn = None
    if attention is not None:
        attn = _ingest(
            attention, name="attention", validator=flashvid.AttentionStack.from_array
        )
    cfg = flashvid.CompressionConfig(**config)
    result = flashvid.run_strategy(flashvid.Strategy(strategy), feats, attn, cfg)
    return AdapterResult(
        tokens=result.tokens,
        provenance=tuple(
            tuple((int(r.frame), int(r.pos)) for r in group)
            for group in result.provenance
        ),
        stats=result.stats,
    )


def dyseg_partition(transitions, *, segment_threshold=0.9, min_segments=8):
    """Partition F frames given their F-1 adjacent-frame similarities.

    Returns ``(start_frame, end_frame)`` pairs covering the frame range.
    """
    segments = flashvid.dyseg_partition(
        np.asarray(transitions, dtype=np.float64),
        segment_threshold,
        min_segments,
    )
    return [(s.start_frame, s.end_frame) for s in segments]


def budget_align(layers, prune_layer, *, expansion_factor=1.25, avg_tokens=627):
    """Token-budget plan for an average-per-layer budget, as a plain dict."""
    plan = flashvid.budget_align(layers, prune_layer, expansion_factor, avg_tokens)
    return plan.to_dict()


def dpcknn_reduce(tokens, target, *, k_nn=None):
    """Density-peaks reduction of an (N, d) array to exactly ``target``
    mean-pooled groups; returns (outputs, clusters)."""
    return flashvid.dpcknn_reduce(np.asarray(tokens, dtype=np.float64), target, k_nn)
