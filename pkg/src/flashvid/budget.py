"""FLOPs models, token-budget alignment, score pruning and DPC-kNN
reduction to exact token targets."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import _kernels
from .tensor import FlashvidError

DEFAULT_KNN = 5


@dataclass(frozen=True)
class ModelShape:
    """Transformer shape parameters for the FLOPs models."""

    layers: int
    hidden: int
    ffn_intermediate: int
    heads: int = 1
    kv_heads: int = 1

    def __post_init__(self):
        if min(self.layers, self.hidden, self.ffn_intermediate, self.heads, self.kv_heads) < 1:
            raise FlashvidError(f"model shape fields must be positive: {self}")
        if self.kv_heads > self.heads:
            raise FlashvidError(
                f"kv_heads {self.kv_heads} exceeds heads {self.heads}"
            )


def flops_standard(shape, n):
    """Prefill FLOPs of a standard transformer: L*(4nd^2 + 2n^2 d + 2ndm)."""
    if n < 1:
        raise FlashvidError(f"sequence length must be >= 1, got {n}")
    n = int(n)
    d = shape.hidden
    m = shape.ffn_intermediate
    return shape.layers * (4 * n * d * d + 2 * n * n * d + 2 * n * d * m)


def flops_gqa(shape, n):
    """Prefill FLOPs with grouped-query attention and a gated FFN:
    L*(2nd^2(1+g/h) + 2n^2 d + 3ndm). Exact rational arithmetic; returns
    int when integral, float otherwise."""
    if n < 1:
        raise FlashvidError(f"sequence length must be >= 1, got {n}")
    n = int(n)
    d = shape.hidden
    m = shape.ffn_intermediate
    proj = 2 * n * d * d * (1 + Fraction(shape.kv_heads, shape.heads))
    total = shape.layers * (proj + 2 * n * n * d + 3 * n * d * m)
    return int(total) if total.denominator == 1 else float(total)


@dataclass(frozen=True)
class BudgetPlan:
    """Token counts implied by an average-per-layer budget.

    ``inner_keep`` is kept as an exact Fraction so the conservation
    identity avg*L = before_llm*K + kept*(L-K) holds in rational
    arithmetic before rounding.
    """

    avg_tokens_per_layer: int
    before_llm_tokens: int
    prune_layer: int
    inner_keep: Fraction
    kept_after_prune: int

    def to_dict(self):
        return {
            "avg_tokens_per_layer": self.avg_tokens_per_layer,
            "before_llm_tokens": self.before_llm_tokens,
            "prune_layer": self.prune_layer,
            "inner_keep": float(self.inner_keep),
            "inner_keep_exact": f"{self.inner_keep.numerator}/{self.inner_keep.denominator}",
            "kept_after_prune": self.kept_after_prune,
        }


def _round_half_up(x: Fraction) -> int:
    return int((x + Fraction(1, 2)).__floor__())


def budget_align(layers, prune_layer, expansion_factor, avg_tokens):
    """Derive the before-LLM token count and the inner keep-ratio
    r = (L - f_e*K) / (f_e*(L - K)) for an average per-layer budget."""
    if not (0 < prune_layer < layers):
        raise FlashvidError(
            f"prune_layer must satisfy 0 < K < L, got K={prune_layer}, L={layers}"
        )
    f_e = Fraction(expansion_factor)
    if f_e < 1:
        raise FlashvidError(f"expansion_factor must be >= 1, got {expansion_factor}")
    if f_e * prune_layer >= layers:
        raise FlashvidError(
            f"infeasible plan: expansion_factor*prune_layer = "
            f"{float(f_e * prune_layer)} >= layers {layers}"
        )
    if avg_tokens < 0:
        raise FlashvidError(f"avg_tokens must be >= 0, got {avg_tokens}")
    keep = (layers - f_e * prune_layer) / (f_e * (layers - prune_layer))
    before = _round_half_up(f_e * avg_tokens)
    kept = _round_half_up(keep * before)
    return BudgetPlan(
        avg_tokens_per_layer=int(avg_tokens),
        before_llm_tokens=before,
        prune_layer=int(prune_layer),
        inner_keep=keep,
        kept_after_prune=kept,
    )


def inner_llm_prune(scores, keep):
    """Indices of the ``keep`` highest-scoring tokens, in original order.

    Ties break to the smallest index.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim != 1:
        raise FlashvidError(f"scores must be a vector, got shape {scores.shape}")
    if not np.isfinite(scores).all():
        raise FlashvidError("scores must be finite")
    if keep > scores.size:
        raise FlashvidError(
            f"cannot keep {keep} of {scores.size} tokens"
        )
    order = np.argsort(-scores, kind="stable")[:keep]
    return sorted(int(i) for i in order)


def dpcknn_reduce(tokens, target, k_nn=None):
    """Cluster N tokens into exactly ``target`` groups by density peaks.

    Density is a Gaussian kNN estimate; separation is the distance to the
    nearest denser point (the densest point gets the max pairwise
    distance). The ``target`` highest density*separation points become
    centers, everything else joins its nearest center, and every group is
    mean-pooled. Returns (outputs, clusters) where clusters holds the
    member indices of each output, ordered by center index.
    """
    tokens = np.asarray(tokens, dtype=np.float64)
    if tokens.ndim != 2:
        raise FlashvidError(f"tokens must be N x d, got shape {tokens.shape}")
    n = tokens.shape[0]
    if not (1 <= target <= n):
        raise FlashvidError(f"target must be in [1, {n}], got {target}")
    if n == 1:
        return tokens.copy(), [[0]]

    sq = np.sum(tokens * tokens, axis=1)
    dist2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * (tokens @ tokens.T), 0.0)
    np.fill_diagonal(dist2, 0.0)
    dist = np.sqrt(dist2)

    k = min(DEFAULT_KNN if k_nn is None else int(k_nn), n - 1)
    if k < 1:
        raise FlashvidError(f"k_nn must be >= 1, got {k}")
    rho = _kernels.knn_density(np.ascontiguousarray(dist2), k)

    # Separation: min distance to any strictly denser point; index breaks
    # density ties so exactly one point tops the ordering.
    delta = np.empty(n)
    max_dist = float(dist.max())
    for i in range(n):
        denser = (rho > rho[i]) | ((rho == rho[i]) & (np.arange(n) < i))
        delta[i] = dist[i][denser].min() if denser.any() else max_dist

    score = rho * delta
    centers = np.sort(np.argsort(-score, kind="stable")[:target])

    assign = centers[np.argmin(dist[:, centers], axis=1)]
    assign[centers] = centers
    clusters = [sorted(np.flatnonzero(assign == c)) for c in centers]
    outputs = np.stack([tokens[idx].mean(axis=0) for idx in clusters])
    return outputs, [[int(i) for i in idx] for idx in clusters]
