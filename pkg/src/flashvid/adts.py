"""Attention and diversity-based token selection.

Each frame's tokens are split into an informative set and a remainder by
greedily solving a max-min diversity problem on the frame's cosine
distance matrix, after calibrating the matrix with two per-token signals:
received attention and event relevance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .similarity import cls_attention_derive, event_relevance, frame_embeddings, pairwise_distance
from .tensor import FlashvidError, TokenRef

CALIBRATION_EPS = 0.01


def _minmax_unit(v, eps=CALIBRATION_EPS):
    # Map into [eps, 1]; a constant vector maps to all-ones, which leaves
    # every argmax decision unchanged.
    v = np.asarray(v, dtype=np.float64)
    lo = v.min()
    hi = v.max()
    span = hi - lo
    if span <= 0.0:
        return np.ones_like(v)
    return eps + (v - lo) * ((1.0 - eps) / span)


def calibrate_distance(dist, attention, relevance):
    """Scale row i of the distance matrix by token i's calibration weights.

    Both vectors are min-max normalized into [0.01, 1] first, so raw
    (possibly negative) relevance scores cannot flip distances negative
    and no row is annihilated outright.
    """
    dist = np.asarray(dist, dtype=np.float64)
    n = dist.shape[0]
    attention = np.asarray(attention, dtype=np.float64)
    relevance = np.asarray(relevance, dtype=np.float64)
    if attention.shape != (n,) or relevance.shape != (n,):
        raise FlashvidError(
            f"calibration vectors must have length {n}, got "
            f"{attention.shape} and {relevance.shape}"
        )
    weights = _minmax_unit(attention) * _minmax_unit(relevance)
    return dist * weights[:, None]


def mmdp_select(dist, quota):
    """Greedy max-min diverse subset of size min(quota, N) on ``dist``.

    First pick maximizes the minimum off-diagonal distance of its row;
    every later pick maximizes the minimum distance to the selected set.
    Ties break to the smallest index. Returns indices in selection order.
    """
    if quota < 1:
        raise FlashvidError(f"mmdp_select quota must be >= 1, got {quota}")
    dist = np.ascontiguousarray(dist, dtype=np.float64)
    if dist.ndim != 2 or dist.shape[0] != dist.shape[1]:
        raise FlashvidError(f"mmdp_select needs a square matrix, got {dist.shape}")
    return _kernels.mmdp_greedy(dist, int(quota))


@dataclass(frozen=True)
class AdtsSelection:
    """Per-frame informative/remainder split; selection order preserved."""

    selected: list[list[TokenRef]]
    remainder: list[list[TokenRef]]

    def selected_count(self):
        return sum(len(s) for s in self.selected)


def adts_select(features, attn, quotas, *, calibrated=True):
    """Run the per-frame calibrated (or raw) greedy diversity selection.

    ``quotas[f]`` tokens are selected in frame f (0 allowed); the
    remainder is the complement in spatial order.
    """
    emb = frame_embeddings(features)
    att = cls_attention_derive(attn)
    rel = event_relevance(features, emb)
    return select_with_signals(features, att, rel, quotas, calibrated=calibrated)


def select_with_signals(features, attention, relevance, quotas, *, calibrated=True):
    """adts_select with precomputed calibration signals (pipeline entry)."""
    num_frames = features.frames
    n_v = features.tokens_per_frame
    if len(quotas) != num_frames:
        raise FlashvidError(
            f"expected {num_frames} quotas, got {len(quotas)}"
        )
    selected = []
    remainder = []
    for f in range(num_frames):
        quota = int(quotas[f])
        if quota > n_v:
            raise FlashvidError(
                f"frame {f}: quota {quota} exceeds tokens per frame {n_v}"
            )
        if quota == 0:
            selected.append([])
            remainder.append([TokenRef(f, p) for p in range(n_v)])
            continue
        dist = pairwise_distance(features.data[f])
        if calibrated:
            dist = calibrate_distance(dist, attention[f], relevance[f])
        picks = mmdp_select(dist, quota)
        chosen = set(int(p) for p in picks)
        selected.append([TokenRef(f, int(p)) for p in picks])
        remainder.append([TokenRef(f, p) for p in range(n_v) if p not in chosen])
    return AdtsSelection(selected=selected, remainder=remainder)


def attention_topk_select(features, attention, quotas):
    """Baseline selection: per frame, the quota highest-attention tokens.

    Ties break to the smallest spatial index; picks are returned in
    descending score order.
    """
    num_frames = features.frames
    n_v = features.tokens_per_frame
    selected = []
    remainder = []
    for f in range(num_frames):
        quota = int(quotas[f])
        order = np.argsort(-np.asarray(attention[f], dtype=np.float64), kind="stable")
        picks = order[:quota]
        chosen = set(int(p) for p in picks)
        selected.append([TokenRef(f, int(p)) for p in picks])
        remainder.append([TokenRef(f, p) for p in range(n_v) if p not in chosen])
    return AdtsSelection(selected=selected, remainder=remainder)
