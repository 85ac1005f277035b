"""Stream keying, transition labels, pivots, and GC."""

import random

from alertsynth.ingest import Alert
from alertsynth.stream_tracker import StreamTracker, classify_direction

EXT_A = "198.51.100.1"
EXT_B = "198.51.100.2"
INT_A = "10.0.0.1"
INT_B = "10.0.0.2"
INT_C = "10.0.0.3"


def mk(ts_s, src, dst):
    return Alert(ts=int(ts_s * 1e6), src_ip=src, dst_ip=dst, src_port=50000,
                 dst_port=80, proto="tcp", signature_id=1, signature_text="t",
                 sensor=None, raw_seq=0)


def tracker(tables, horizon=3600.0):
    return StreamTracker(tables.homenet, horizon)


class TestDirection:
    def test_all_four_pairings(self, tables):
        h = tables.homenet
        assert classify_direction(mk(0, EXT_A, INT_A), h) == "inbound"
        assert classify_direction(mk(0, INT_A, EXT_A), h) == "outbound"
        assert classify_direction(mk(0, INT_A, INT_B), h) == "internal"
        # external-to-external anchors on the source
        assert classify_direction(mk(0, EXT_A, EXT_B), h) == "inbound"


class TestExternalStreams:
    def test_inbound_keyed_by_source(self, tables):
        t = tracker(tables)
        sid, direction, trans, elapsed = t.assign(mk(0, EXT_A, INT_A))
        assert (sid, direction, trans, elapsed) == (EXT_A, "inbound",
                                                    "stream_start", None)
        sid2, _, trans2, elapsed2 = t.assign(mk(10, EXT_A, INT_B))
        assert sid2 == EXT_A
        assert trans2 == "same_src_new_dst"
        assert elapsed2 == 10_000_000
        _, _, trans3, _ = t.assign(mk(20, EXT_A, INT_B))
        assert trans3 == "same_src_same_dst"

    def test_outbound_keyed_by_destination(self, tables):
        t = tracker(tables)
        sid, direction, trans, _ = t.assign(mk(0, INT_A, EXT_A))
        assert (sid, direction, trans) == (EXT_A, "outbound", "stream_start")
        sid2, _, trans2, _ = t.assign(mk(5, INT_B, EXT_A))
        assert sid2 == EXT_A
        assert trans2 == "new_src_same_dst"

    def test_replies_join_the_same_stream(self, tables):
        t = tracker(tables)
        t.assign(mk(0, EXT_A, INT_A))
        # the victim answers: same stream, source was the last destination
        sid, direction, trans, _ = t.assign(mk(1, INT_A, EXT_A))
        assert sid == EXT_A
        assert direction == "outbound"
        assert trans == "src_is_last_dst"

    def test_dst_is_last_src(self, tables):
        t = tracker(tables)
        t.assign(mk(0, EXT_A, INT_C))
        # a different internal host reaches back to the anchor
        sid, _, trans, _ = t.assign(mk(1, INT_B, EXT_A))
        assert sid == EXT_A
        assert trans == "dst_is_last_src"

    def test_distinct_external_sources_distinct_streams(self, tables):
        t = tracker(tables)
        sid1 = t.assign(mk(0, EXT_A, INT_A))[0]
        sid2 = t.assign(mk(1, EXT_B, INT_A))[0]
        assert sid1 != sid2


class TestInternalPivots:
    def test_pivot_joins_recent_stream(self, tables):
        t = tracker(tables)
        t.assign(mk(0, EXT_A, INT_A))       # stream EXT_A touches INT_A
        sid, direction, trans, elapsed = t.assign(mk(10, INT_A, INT_B))
        assert sid == EXT_A
        assert direction == "internal"
        assert trans == "internal_pivot"
        assert elapsed == 10_000_000

    def test_pivot_chain(self, tables):
        t = tracker(tables)
        t.assign(mk(0, EXT_A, INT_A))
        t.assign(mk(10, INT_A, INT_B))      # touches INT_B too
        sid, _, trans, _ = t.assign(mk(20, INT_B, INT_C))
        assert sid == EXT_A
        assert trans == "internal_pivot"

    def test_pivot_horizon_expires(self, tables):
        t = tracker(tables, horizon=60.0)
        t.assign(mk(0, EXT_A, INT_A))
        sid, _, trans, elapsed = t.assign(mk(61.0, INT_A, INT_B))
        assert sid.startswith("internal#")
        assert trans == "stream_start"
        assert elapsed is None

    def test_orphan_internal_gets_synthetic_stream(self, tables):
        t = tracker(tables)
        sid1 = t.assign(mk(0, INT_A, INT_B))[0]
        sid2 = t.assign(mk(10000, INT_C, INT_B))[0]
        assert sid1 == "internal#0"
        assert sid2 == "internal#1"

    def test_anchor_reengages_after_pivot(self, tables):
        # a pivot must not erase the stream's external dialogue endpoints
        t = tracker(tables)
        t.assign(mk(0, EXT_A, INT_A))
        t.assign(mk(10, INT_A, INT_B))
        sid, _, trans, _ = t.assign(mk(20, EXT_A, INT_C))
        assert sid == EXT_A
        assert trans == "same_src_new_dst"

    def test_most_recent_touch_wins(self, tables):
        t = tracker(tables)
        t.assign(mk(0, EXT_A, INT_A))
        t.assign(mk(5, EXT_B, INT_A))       # EXT_B touched INT_A later
        sid = t.assign(mk(10, INT_A, INT_B))[0]
        assert sid == EXT_B

    def test_touch_tie_breaks_to_larger_stream_id(self, tables):
        t = tracker(tables)
        t.assign(mk(0, EXT_A, INT_A))
        t.assign(mk(0, EXT_B, INT_A))       # same touch timestamp
        sid = t.assign(mk(1, INT_A, INT_B))[0]
        assert sid == max(EXT_A, EXT_B)


class TestClockAndGC:
    def test_out_of_order_clamps_elapsed(self, tables):
        t = tracker(tables)
        t.assign(mk(100, EXT_A, INT_A))
        _, _, _, elapsed = t.assign(mk(90, EXT_A, INT_A))
        assert elapsed == 0
        # last_ts stays monotone at the max seen
        _, _, _, elapsed2 = t.assign(mk(120, EXT_A, INT_A))
        assert elapsed2 == 20_000_000

    def test_gc_evicts_idle_streams(self, tables):
        t = tracker(tables)
        t.assign(mk(0, EXT_A, INT_A))
        t.assign(mk(5000, EXT_B, INT_B))
        evicted = t.gc(int(6000 * 1e6), idle_timeout=3600.0)
        assert [s.stream_id for s in evicted] == [EXT_A]
        assert EXT_A not in t.states
        assert EXT_B in t.states

    def test_gc_detaches_pivot_index(self, tables):
        t = tracker(tables)
        t.assign(mk(0, EXT_A, INT_A))
        t.gc(int(7200 * 1e6), idle_timeout=3600.0)
        sid = t.assign(mk(7201, INT_A, INT_B))[0]
        assert sid.startswith("internal#")


class TestTotality:
    def test_fuzzed_assign_never_fails(self, tables):
        rng = random.Random(42)
        internal = [f"10.0.0.{i}" for i in range(1, 6)]
        external = [f"198.51.100.{i}" for i in range(1, 6)]
        t = tracker(tables)
        transitions = {"stream_start", "same_src_same_dst", "same_src_new_dst",
                       "new_src_same_dst", "src_is_last_dst", "dst_is_last_src",
                       "internal_pivot"}
        ts = 0.0
        for _ in range(500):
            ts += rng.random() * 100
            src, dst = rng.choice(internal + external), rng.choice(internal + external)
            if src == dst:
                continue
            sid, direction, trans, elapsed = t.assign(mk(ts, src, dst))
            assert trans in transitions
            assert direction in ("inbound", "outbound", "internal")
            assert (elapsed is None) == (trans == "stream_start")
            assert sid in t.states
