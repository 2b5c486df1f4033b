"""Shared similarity and embedding kernels.

All kernels accept float32 storage and accumulate in float64. Zero-norm
rows get cosine similarity 0 by convention, which keeps the downstream
distance matrices bounded on degenerate inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor import FlashvidError


def _unit_rows(a):
    a = np.asarray(a, dtype=np.float64)
    norms = np.linalg.norm(a, axis=1, keepdims=True)
    out = np.zeros_like(a)
    nz = norms[:, 0] > 0.0
    out[nz] = a[nz] / norms[nz]
    return out


def cosine_matrix(a, b):
    """M x N cosine similarities between the rows of ``a`` and ``b``."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[1]:
        raise FlashvidError(
            f"cosine_matrix: incompatible shapes {a.shape} and {b.shape}"
        )
    sim = _unit_rows(a) @ _unit_rows(b).T
    return np.clip(sim, -1.0, 1.0)


def pairwise_distance(frame):
    """Cosine distance matrix 1 - cos within one frame; zero diagonal."""
    d = 1.0 - cosine_matrix(frame, frame)
    np.fill_diagonal(d, 0.0)
    return np.clip(d, 0.0, 2.0)


@dataclass(frozen=True)
class FrameEmbeddings:
    """Per-frame embeddings: global average pool over each frame's tokens."""

    data: np.ndarray  # (F, d) float64

    @property
    def frames(self):
        return self.data.shape[0]

    @property
    def dim(self):
        return self.data.shape[1]


def frame_embeddings(features):
    """Mean-pool each frame's token vectors into one embedding per frame."""
    return FrameEmbeddings(features.data.mean(axis=1, dtype=np.float64))


def transition_similarities(emb):
    """Cosine similarity of each adjacent frame-embedding pair (length F-1)."""
    if emb.frames < 2:
        raise FlashvidError("transition_similarities needs at least 2 frames")
    a = _unit_rows(emb.data[:-1])
    b = _unit_rows(emb.data[1:])
    return np.clip(np.sum(a * b, axis=1), -1.0, 1.0)


def event_relevance(features, emb):
    """Each token's dot product with the frame embeddings, averaged over frames.

    Raw inner products, no normalization; range control happens in the
    selection module's calibration step.
    """
    if emb.frames != features.frames or emb.dim != features.dim:
        raise FlashvidError(
            f"event_relevance: embedding shape {emb.data.shape} does not match "
            f"features ({features.frames}, {features.dim})"
        )
    mean_emb = emb.data.mean(axis=0)
    return features.data.astype(np.float64) @ mean_emb


def cls_attention_derive(attn):
    """Per-token received attention: column mean of each frame's matrix.

    For row-stochastic inputs each frame's output sums to 1.
    """
    return attn.data.mean(axis=1, dtype=np.float64)


@dataclass(frozen=True)
class CalibrationVectors:
    """The two per-token calibration signals used by the selection module."""

    cls_attention: np.ndarray  # (F, N_v)
    event_relevance: np.ndarray  # (F, N_v)


def calibration_vectors(features, attn):
    emb = frame_embeddings(features)
    return CalibrationVectors(
        cls_attention=cls_attention_derive(attn),
        event_relevance=event_relevance(features, emb),
    )
