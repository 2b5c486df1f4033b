import numpy as np
from hypothesis import given, strategies as st

from flashvid import dyseg_cuts, dyseg_partition


def _cover_ok(segments, num_frames):
    assert segments[0].start_frame == 0
    assert segments[-1].end_frame == num_frames - 1
    for prev, cur in zip(segments, segments[1:]):
        assert cur.start_frame == prev.end_frame + 1
    assert all(s.start_frame <= s.end_frame for s in segments)


def test_hand_traced_six_frames():
    t = [0.95, 0.85, 0.95, 0.80, 0.95]
    segs = dyseg_partition(t, 0.9, 2)
    assert [(s.start_frame, s.end_frame) for s in segs] == [(0, 1), (2, 3), (4, 5)]
    assert all(c.reason == "threshold" for c in dyseg_cuts(t, 0.9, 2))


def test_forced_cuts_earliest_index_tiebreak():
    t = [1.0] * 9
    segs = dyseg_partition(t, 0.9, 8)
    assert len(segs) == 8
    assert [(s.start_frame, s.end_frame) for s in segs] == [
        (0, 0), (1, 1), (2, 2), (3, 3), (4, 4), (5, 5), (6, 6), (7, 9),
    ]
    cuts = dyseg_cuts(t, 0.9, 8)
    assert [c.after_frame for c in cuts] == list(range(7))
    assert all(c.reason == "floor" for c in cuts)


def test_single_frame():
    segs = dyseg_partition([], 0.9, 8)
    assert [(s.start_frame, s.end_frame) for s in segs] == [(0, 0)]


def test_forced_cuts_prefer_smallest_similarity():
    t = [0.99, 0.92, 0.95, 0.93]
    segs = dyseg_partition(t, 0.9, 3)
    cuts = dyseg_cuts(t, 0.9, 3)
    assert [c.after_frame for c in cuts] == [1, 3]
    assert len(segs) == 3


transitions = st.lists(
    st.floats(0.0, 1.0, allow_nan=False), min_size=0, max_size=24
)


@given(transitions, st.floats(0.05, 1.0), st.integers(1, 10))
def test_cover_and_count_bounds(t, s_tau, m_s):
    num_frames = len(t) + 1
    segs = dyseg_partition(t, s_tau, m_s)
    _cover_ok(segs, num_frames)
    assert min(m_s, num_frames) <= len(segs) <= num_frames


@given(transitions, st.floats(0.05, 0.95), st.floats(0.0, 0.5), st.integers(1, 6))
def test_threshold_cut_monotonicity(t, s_hi, drop, m_s):
    s_lo = s_hi - drop
    hi = {c.after_frame for c in dyseg_cuts(t, s_hi, m_s) if c.reason == "threshold"}
    lo = {c.after_frame for c in dyseg_cuts(t, s_lo, m_s) if c.reason == "threshold"}
    assert lo <= hi


@given(transitions, st.floats(0.05, 1.0), st.integers(1, 10))
def test_boundary_provenance(t, s_tau, m_s):
    t = np.asarray(t)
    cuts = dyseg_cuts(t, s_tau, m_s)
    for c in cuts:
        if c.reason == "threshold":
            assert t[c.after_frame] < s_tau
        else:
            assert c.reason == "floor"
            assert t[c.after_frame] >= s_tau
    num_frames = t.size + 1
    if len(cuts) + 1 > min(m_s, num_frames):
        # above the floor, every cut must be a genuine threshold cut
        assert all(c.reason == "threshold" for c in cuts)
