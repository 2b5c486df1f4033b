"""Dynamic video partition: cut the frame sequence where adjacent-frame
similarity drops, then force extra cuts until a minimum segment count is
reached."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor import FlashvidError


@dataclass(frozen=True)
class Segment:
    """Contiguous frame range, inclusive on both ends."""

    start_frame: int
    end_frame: int

    def __post_init__(self):
        if self.start_frame > self.end_frame:
            raise FlashvidError(
                f"segment start {self.start_frame} > end {self.end_frame}"
            )

    def frames(self):
        return range(self.start_frame, self.end_frame + 1)


@dataclass(frozen=True)
class Boundary:
    """A cut after ``after_frame``; reason is "threshold" or "floor"."""

    after_frame: int
    reason: str


def dyseg_cuts(transitions, segment_threshold, min_segments):
    """Cut positions with provenance for a transition-similarity vector.

    A cut goes after frame i whenever transitions[i] < threshold. If that
    yields fewer than min(min_segments, F) segments, extra "floor" cuts are
    added at the lowest remaining similarities, ties to the earliest frame.
    """
    t = np.asarray(transitions, dtype=np.float64)
    num_frames = t.size + 1
    cuts = {
        int(i): Boundary(int(i), "threshold")
        for i in range(t.size)
        if t[i] < segment_threshold
    }
    needed = min(int(min_segments), num_frames)
    if len(cuts) + 1 < needed:
        order = sorted(
            (i for i in range(t.size) if i not in cuts),
            key=lambda i: (t[i], i),
        )
        for i in order[: needed - len(cuts) - 1]:
            cuts[i] = Boundary(i, "floor")
    return [cuts[i] for i in sorted(cuts)]


def dyseg_partition(transitions, segment_threshold, min_segments):
    """Ordered contiguous segments covering [0, F) for F = len(t) + 1."""
    t = np.asarray(transitions, dtype=np.float64)
    num_frames = t.size + 1
    bounds = dyseg_cuts(t, segment_threshold, min_segments)
    starts = [0] + [b.after_frame + 1 for b in bounds]
    ends = [b.after_frame for b in bounds] + [num_frames - 1]
    return [Segment(s, e) for s, e in zip(starts, ends)]
