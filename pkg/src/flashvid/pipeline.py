"""End-to-end compression: partition, per-frame selection, segment-scoped
tree merging, and DPC-kNN trimming to the token budget. Also hosts the
simplified baseline strategies used by the ablation-direction checks."""

from __future__ import annotations

import math
import time
from enum import Enum
from fractions import Fraction

import numpy as np

from .adts import attention_topk_select, select_with_signals
from .budget import dpcknn_reduce
from .partition import dyseg_partition
from .similarity import cls_attention_derive, event_relevance, frame_embeddings, transition_similarities
from .tensor import (
    AttentionStack,
    CompressionConfig,
    CompressionResult,
    FlashvidError,
    InternalError,
    TokenRef,
    round_half_up,
)
from .tstm import FrameTokens, TstmConstraints, aggregate_forest, build_forest, ttm_baseline


class Strategy(str, Enum):
    FLASHVID = "flashvid"
    TTM_ONLY = "ttm_only"
    ATS_ONLY = "ats_only"
    DTS_ONLY = "dts_only"
    TSTM_ONLY = "tstm_only"
    ADTS_ONLY = "adts_only"


def resolve_budget(features, config):
    """Total output budget M: explicit, or round(f_e * R * F * N_v)."""
    if config.budget is not None:
        return int(config.budget)
    total = features.frames * features.tokens_per_frame
    return round_half_up(
        Fraction(config.expansion_factor) * Fraction(config.retention_ratio) * total
    )


def _frame_quotas(total_selected, num_frames, tokens_per_frame):
    # Uniform split, one extra per frame from frame 0 for the remainder.
    base, extra = divmod(total_selected, num_frames)
    quotas = [base + (1 if f < extra else 0) for f in range(num_frames)]
    if any(q > tokens_per_frame for q in quotas):
        raise InternalError(
            f"per-frame quota exceeds {tokens_per_frame} for total {total_selected}"
        )
    return quotas


def _allocate_proportional(counts, target):
    """Split ``target`` across groups proportionally to ``counts``.

    Every group gets at least 1 and at most counts[i]; requires
    len(counts) <= target <= sum(counts). Deterministic largest-remainder
    rounding.
    """
    m = len(counts)
    total = sum(counts)
    if not (m <= target <= total):
        raise InternalError(f"cannot allocate {target} across counts {counts}")
    raw = [Fraction(target * c, total) for c in counts]
    alloc = [min(counts[i], max(1, math.floor(raw[i]))) for i in range(m)]
    frac = [raw[i] - math.floor(raw[i]) for i in range(m)]
    diff = target - sum(alloc)
    while diff != 0:
        if diff > 0:
            order = sorted(range(m), key=lambda i: (-frac[i], i))
            for i in order:
                if alloc[i] < counts[i]:
                    alloc[i] += 1
                    diff -= 1
                    if diff == 0:
                        break
        else:
            order = sorted(range(m), key=lambda i: (frac[i], -i))
            for i in order:
                if alloc[i] > 1:
                    alloc[i] -= 1
                    diff += 1
                    if diff == 0:
                        break
    return alloc


def _flat_mean(features, members):
    vecs = np.stack(
        [features.data[m.frame, m.pos] for m in members]
    ).astype(np.float64)
    return vecs.mean(axis=0)


def run_strategy(strategy, features, attn=None, config=None):
    """Run one compression strategy; see flashvid_compress for the default."""
    strategy = Strategy(strategy)
    config = config if config is not None else CompressionConfig()
    if attn is None:
        attn = AttentionStack.uniform(features.frames, features.tokens_per_frame)
    if (
        attn.frames != features.frames
        or attn.tokens_per_frame != features.tokens_per_frame
    ):
        raise FlashvidError(
            f"attention shape {attn.data.shape} does not match features "
            f"{features.data.shape}"
        )

    num_frames = features.frames
    n_v = features.tokens_per_frame
    total = num_frames * n_v
    timings = {}
    t_start = time.perf_counter()

    # Stage 0: partition.
    t0 = time.perf_counter()
    emb = frame_embeddings(features)
    transitions = (
        transition_similarities(emb) if num_frames > 1 else np.zeros(0)
    )
    segments = dyseg_partition(
        transitions, config.segment_threshold, config.min_segments
    )
    timings["partition"] = time.perf_counter() - t0

    budget_m = resolve_budget(features, config)

    # Stage 1: per-frame selection.
    t0 = time.perf_counter()
    if strategy is Strategy.TSTM_ONLY or strategy is Strategy.TTM_ONLY:
        alpha = 0.0
    elif strategy is Strategy.ADTS_ONLY:
        alpha = 1.0
    else:
        alpha = config.adts_ratio
    target_selected = min(math.floor(alpha * budget_m), total)
    quotas = _frame_quotas(target_selected, num_frames, n_v)
    if strategy is Strategy.ATS_ONLY:
        attention = cls_attention_derive(attn)
        selection = attention_topk_select(features, attention, quotas)
    else:
        attention = cls_attention_derive(attn)
        relevance = event_relevance(features, emb)
        selection = select_with_signals(
            features,
            attention,
            relevance,
            quotas,
            calibrated=strategy is not Strategy.DTS_ONLY,
        )
    n_selected = selection.selected_count()
    timings["selection"] = time.perf_counter() - t0

    # Stage 2: segment-scoped tree merging over the remainders.
    t0 = time.perf_counter()
    constraints = TstmConstraints(
        max_depth=config.max_depth, neighborhood=config.neighborhood
    )
    links_per_frame = [0] * num_frames
    link_sims = []
    per_segment_frags = []
    n_remainder = 0
    for seg in segments:
        frames = []
        for f in seg.frames():
            positions = np.array(
                [r.pos for r in selection.remainder[f]], dtype=np.int64
            )
            frames.append(
                FrameTokens(f, positions, features.data[f][positions])
            )
            n_remainder += len(positions)
        if strategy is Strategy.TTM_ONLY:
            forest = ttm_baseline(frames, config.merge_threshold)
        else:
            forest = build_forest(frames, config.merge_threshold, constraints)
        for f, c in enumerate(forest.links_per_frame(num_frames)):
            links_per_frame[f] += c
        link_sims.extend(forest.link_similarity.values())
        per_segment_frags.append(aggregate_forest(forest, frames))
    trees_formed = sum(len(frags) for frags in per_segment_frags)
    timings["merging"] = time.perf_counter() - t0

    # Stage 3: trim merged tokens to the remaining budget.
    t0 = time.perf_counter()
    target_merged = budget_m - n_selected
    merged_entries = []
    dropped = 0
    dpc_groups = 0
    nonempty = [frags for frags in per_segment_frags if frags]
    counts = [len(frags) for frags in nonempty]
    if trees_formed <= max(target_merged, 0):
        for frags in nonempty:
            merged_entries.extend(frags)
    elif target_merged <= 0:
        dropped = sum(len(members) for frags in nonempty for _, members in frags)
    else:
        if target_merged < len(nonempty):
            # Budget too small for one token per segment: reduce globally.
            all_frags = [frag for frags in nonempty for frag in frags]
            merged_entries.extend(
                _reduce_fragments(features, all_frags, target_merged)
            )
            dpc_groups += 1
        else:
            alloc = _allocate_proportional(counts, target_merged)
            for frags, take in zip(nonempty, alloc):
                if take == len(frags):
                    merged_entries.extend(frags)
                else:
                    merged_entries.extend(
                        _reduce_fragments(features, frags, take)
                    )
                    dpc_groups += 1
    timings["budget"] = time.perf_counter() - t0

    # Assemble, ordered by the smallest provenance ref of each output.
    entries = []
    for per_frame in selection.selected:
        for ref in per_frame:
            entries.append(
                (features.data[ref.frame, ref.pos].astype(np.float64), [ref])
            )
    entries.extend(merged_entries)
    entries.sort(key=lambda e: e[1][0])
    if entries:
        tokens = np.stack([vec for vec, _ in entries]).astype(np.float32)
    else:
        tokens = np.zeros((0, features.dim), dtype=np.float32)
    if tokens.shape[0] > budget_m:
        raise InternalError(
            f"output count {tokens.shape[0]} exceeds budget {budget_m}"
        )
    timings["total"] = time.perf_counter() - t_start

    stats = {
        "strategy": strategy.value,
        "input_tokens": total,
        "output_tokens": int(tokens.shape[0]),
        "budget": int(budget_m),
        "segments": [[s.start_frame, s.end_frame] for s in segments],
        "adts_selected": int(n_selected),
        "remainder_tokens": int(n_remainder),
        "trees_formed": int(trees_formed),
        "tstm_links": len(link_sims),
        "links_per_frame": links_per_frame,
        "mean_link_similarity": (
            float(np.mean(sorted(link_sims))) if link_sims else None
        ),
        "dpcknn_groups_reduced": int(dpc_groups),
        "dropped_tokens": int(dropped),
        "timings": timings,
    }
    return CompressionResult(
        tokens=tokens,
        provenance=[members for _, members in entries],
        stats=stats,
    )


def _reduce_fragments(features, frags, take):
    """DPC-kNN over fragment vectors; merged groups are re-pooled as the
    flat mean of all underlying input tokens so the mean-of-provenance
    invariant survives uneven tree sizes."""
    vecs = np.stack([vec for vec, _ in frags])
    _, clusters = dpcknn_reduce(vecs, take)
    out = []
    for idx in clusters:
        members = sorted(m for i in idx for m in frags[i][1])
        out.append((_flat_mean(features, members), members))
    return out


def flashvid_compress(features, attn=None, config=None):
    """Full pipeline: partition, calibrated diverse selection, tree-based
    merging within segments, and exact-budget trimming."""
    return run_strategy(Strategy.FLASHVID, features, attn, config)
