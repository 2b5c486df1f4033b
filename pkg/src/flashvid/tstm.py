"""Tree-based spatiotemporal token merging.

Each remainder token links to its most similar token in the previous
frame when that similarity clears the merge threshold, growing redundancy
trees across frames; every tree is then mean-pooled into one output
token. Optional constraints bound tree depth and the spatial neighborhood
a link may span.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .similarity import cosine_matrix
from .tensor import FlashvidError, TokenRef


@dataclass(frozen=True)
class TstmConstraints:
    """Optional merge limits; None means unlimited."""

    max_depth: int | None = None
    neighborhood: int | None = None

    def __post_init__(self):
        if self.max_depth is not None and self.max_depth < 1:
            raise FlashvidError(f"max_depth must be >= 1, got {self.max_depth}")
        if self.neighborhood is not None and self.neighborhood < 1:
            raise FlashvidError(f"neighborhood must be >= 1, got {self.neighborhood}")


UNCONSTRAINED = TstmConstraints()


@dataclass(frozen=True)
class FrameTokens:
    """One frame's surviving tokens: original spatial indices + vectors."""

    frame: int
    positions: np.ndarray  # (n,) int64, strictly increasing
    vectors: np.ndarray  # (n, d)

    def __len__(self):
        return len(self.positions)

    def refs(self):
        return [TokenRef(self.frame, int(p)) for p in self.positions]


@dataclass
class MergeForest:
    """Parent map over TokenRefs; links only span adjacent frames."""

    nodes: list[TokenRef]
    parent: dict[TokenRef, TokenRef] = field(default_factory=dict)
    link_similarity: dict[TokenRef, float] = field(default_factory=dict)

    def roots(self):
        return [n for n in self.nodes if n not in self.parent]

    def root_of(self, node):
        while node in self.parent:
            node = self.parent[node]
        return node

    def trees(self):
        """Member lists grouped by root, ordered by root ref; members sorted."""
        groups: dict[TokenRef, list[TokenRef]] = {}
        for n in self.nodes:
            groups.setdefault(self.root_of(n), []).append(n)
        return [sorted(groups[r]) for r in sorted(groups)]

    def link_count(self):
        return len(self.parent)

    def links_per_frame(self, num_frames):
        counts = [0] * num_frames
        for child in self.parent:
            counts[child.frame] += 1
        return counts

    def mean_link_similarity(self):
        if not self.link_similarity:
            return None
        return float(np.mean(sorted(self.link_similarity.values())))

    def depths(self):
        """Nodes on each node's path to its root (root depth 1)."""
        memo: dict[TokenRef, int] = {}

        def depth(n):
            if n not in memo:
                memo[n] = 1 if n not in self.parent else 1 + depth(self.parent[n])
            return memo[n]

        return {n: depth(n) for n in self.nodes}


def _check_frames(frames):
    if not frames:
        raise FlashvidError("build_forest needs at least one frame")
    for prev, cur in zip(frames, frames[1:]):
        if cur.frame != prev.frame + 1:
            raise FlashvidError(
                f"frames must be consecutive, got {prev.frame} then {cur.frame}"
            )


def _link(frames, merge_threshold, candidate_sims):
    """Shared linking loop; candidate_sims yields a masked similarity matrix
    (child rows x parent columns) per adjacent frame pair, or None."""
    forest = MergeForest(nodes=[r for ft in frames for r in ft.refs()])
    for prev, cur in zip(frames, frames[1:]):
        if len(prev) == 0 or len(cur) == 0:
            continue
        sims = candidate_sims(cur, prev)
        if sims is None:
            continue
        best = np.argmax(sims, axis=1)  # first max -> smallest parent index
        for i, j in enumerate(best):
            s = sims[i, j]
            if s >= merge_threshold:
                child = TokenRef(cur.frame, int(cur.positions[i]))
                forest.parent[child] = TokenRef(prev.frame, int(prev.positions[j]))
                forest.link_similarity[child] = float(s)
    return forest


def build_forest(frames, merge_threshold, constraints=UNCONSTRAINED):
    """Grow redundancy trees over per-frame remainder tokens.

    Each token in frame f picks the argmax-cosine parent among frame f-1
    tokens (restricted to |pos_child - pos_parent| <= neighborhood when
    finite) and links iff the similarity is >= merge_threshold. Ties on
    similarity go to the smallest parent index. A finite max_depth is
    enforced by a backward pruning pass over the built forest.
    """
    _check_frames(frames)
    k = constraints.neighborhood

    def sims_for(cur, prev):
        sims = cosine_matrix(cur.vectors, prev.vectors)
        if k is not None:
            gap = np.abs(cur.positions[:, None] - prev.positions[None, :])
            sims = np.where(gap <= k, sims, -np.inf)
        return sims

    forest = _link(frames, merge_threshold, sims_for)
    if constraints.max_depth is not None:
        _prune_depth(forest, frames, constraints.max_depth)
    return forest


def ttm_baseline(frames, merge_threshold):
    """Rigid-position merging: the only candidate parent is the token at the
    same spatial index in the previous frame."""
    _check_frames(frames)

    def sims_for(cur, prev):
        pos_to_col = {int(p): c for c, p in enumerate(prev.positions)}
        sims = np.full((len(cur), len(prev)), -np.inf)
        rows = []
        cols = []
        for i, p in enumerate(cur.positions):
            c = pos_to_col.get(int(p))
            if c is not None:
                rows.append(i)
                cols.append(c)
        if not rows:
            return None
        full = cosine_matrix(cur.vectors[rows], prev.vectors[cols])
        sims[rows, cols] = np.diagonal(full)
        return sims

    return _link(frames, merge_threshold, sims_for)


def _prune_depth(forest, frames, max_depth):
    # Backward pass, deepest frame first. depth(n) here is the depth of the
    # subtree hanging below n (a leaf has depth 1); a node whose subtree
    # reaches max_depth is cut from its parent and becomes a root. Children
    # live one frame later, so subtree depths are final when a frame is
    # visited, and no surviving tree can exceed max_depth.
    children: dict[TokenRef, list[TokenRef]] = {}
    for child, par in forest.parent.items():
        children.setdefault(par, []).append(child)
    subtree: dict[TokenRef, int] = {}
    for ft in reversed(frames):
        for ref in ft.refs():
            kids = children.get(ref, ())
            subtree[ref] = 1 + max((subtree[c] for c in kids), default=0)
            if subtree[ref] == max_depth and ref in forest.parent:
                par = forest.parent.pop(ref)
                del forest.link_similarity[ref]
                children[par].remove(ref)


def aggregate_forest(forest, frames):
    """Mean-pool every tree into one vector.

    Returns (vector, members) pairs ordered by root ref; vectors are the
    float64 arithmetic mean of the member token vectors.
    """
    lookup = {}
    for ft in frames:
        for idx, p in enumerate(ft.positions):
            lookup[TokenRef(ft.frame, int(p))] = ft.vectors[idx]
    out = []
    for members in forest.trees():
        vecs = np.stack([lookup[m] for m in members]).astype(np.float64)
        out.append((vecs.mean(axis=0), members))
    return out
