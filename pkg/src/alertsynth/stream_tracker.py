"""Alert-stream assignment and per-stream state.

A stream ties together the alerts anchored to one external endpoint: the
alerts it originates (inbound), the replies feeding back to it (outbound),
and internal continuations of the same maneuver (pivots).  Purely internal
chains with no qualifying pivot ancestor get synthetic stream keys.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .action_space import Homenet
from .ingest import Alert


@dataclass
class StreamState:
    """Mutable per-stream bookkeeping."""

    stream_id: str
    last_ts: int
    last_src: str
    last_dst: str
    # internal ip -> last-touch microseconds; entries expire after the
    # pivot horizon (enforced at read time)
    touched_internal_hosts: Dict[str, int] = field(default_factory=dict)
    handle: object = None        # open segmenter, owned by the pipeline


def classify_direction(alert: Alert, homenet: Homenet) -> str:
    """inbound | outbound | internal; external-to-external counts as inbound."""
    src_in = homenet.contains(alert.src_ip)
    dst_in = homenet.contains(alert.dst_ip)
    if src_in:
        return "internal" if dst_in else "outbound"
    return "inbound"


class StreamTracker:
    """Owns the stream table; single pipeline stage, no concurrent mutation."""

    def __init__(self, homenet: Homenet, pivot_horizon: float) -> None:
        self.homenet = homenet
        self.pivot_horizon_us = int(pivot_horizon * 1e6)
        self.states: Dict[str, StreamState] = {}
        # internal ip -> {stream_id: last_touch_us}; lets a pivot alert find
        # every stream that recently touched its source host
        self._touch_index: Dict[str, Dict[str, int]] = {}
        self._synthetic_seq = 0

    def assign(self, alert: Alert) -> Tuple[str, str, str, Optional[int]]:
        """Assign one alert; returns (stream_id, direction, transition, elapsed_us).

        elapsed_us is None exactly when the alert starts a new stream.
        """
        direction = classify_direction(alert, self.homenet)
        if direction == "internal":
            state = self._find_pivot_stream(alert.src_ip, alert.ts)
            if state is None:
                state = self._new_state(f"internal#{self._synthetic_seq}", alert)
                self._synthetic_seq += 1
                transition, elapsed = "stream_start", None
            else:
                transition, elapsed = "internal_pivot", max(0, alert.ts - state.last_ts)
            self._touch(state, alert.ts, alert.src_ip, alert.dst_ip)
        else:
            key = alert.src_ip if direction == "inbound" else alert.dst_ip
            state = self.states.get(key)
            if state is None:
                state = self._new_state(key, alert)
                transition, elapsed = "stream_start", None
            else:
                transition = self._transition(state, alert)
                elapsed = max(0, alert.ts - state.last_ts)
            internal_end = alert.dst_ip if direction == "inbound" else alert.src_ip
            if self.homenet.contains(internal_end):
                self._touch(state, alert.ts, internal_end)

        state.last_ts = max(state.last_ts, alert.ts)
        if direction != "internal" or transition == "stream_start":
            # a pivot continues the maneuver laterally; the stream's dialogue
            # endpoints stay on the external exchange so the next anchored
            # alert still matches one of the four transition equalities
            state.last_src = alert.src_ip
            state.last_dst = alert.dst_ip
        return state.stream_id, direction, transition, elapsed

    @staticmethod
    def _transition(state: StreamState, alert: Alert) -> str:
        # precedence order is significant
        if alert.src_ip == state.last_src:
            return ("same_src_same_dst" if alert.dst_ip == state.last_dst
                    else "same_src_new_dst")
        if alert.dst_ip == state.last_dst:
            return "new_src_same_dst"
        if alert.src_ip == state.last_dst:
            return "src_is_last_dst"
        if alert.dst_ip == state.last_src:
            return "dst_is_last_src"
        # the stream key is an endpoint of every anchored alert and pivots
        # leave last_src/last_dst untouched, so the key sits on both sides of
        # the comparison and one of the four equalities always holds
        raise AssertionError(f"unreachable transition in {state.stream_id}")

    def _new_state(self, stream_id: str, alert: Alert) -> StreamState:
        state = StreamState(stream_id=stream_id, last_ts=alert.ts,
                            last_src=alert.src_ip, last_dst=alert.dst_ip)
        self.states[stream_id] = state
        return state

    def _touch(self, state: StreamState, ts: int, *ips: str) -> None:
        for ip in ips:
            if not self.homenet.contains(ip):
                continue
            prev = state.touched_internal_hosts.get(ip, 0)
            stamp = max(prev, ts)
            state.touched_internal_hosts[ip] = stamp
            self._touch_index.setdefault(ip, {})[state.stream_id] = stamp

    def _find_pivot_stream(self, ip: str, now: int) -> Optional[StreamState]:
        entries = self._touch_index.get(ip)
        if not entries:
            return None
        best: Optional[Tuple[int, str]] = None
        stale: List[str] = []
        for stream_id, touched in entries.items():
            if now - touched > self.pivot_horizon_us or stream_id not in self.states:
                stale.append(stream_id)
                continue
            cand = (touched, stream_id)
            if best is None or cand > best:
                best = cand
        for stream_id in stale:
            del entries[stream_id]
        if not entries:
            del self._touch_index[ip]
        return self.states[best[1]] if best else None

    def gc(self, now: int, idle_timeout: float) -> List[StreamState]:
        """Evict streams idle longer than idle_timeout seconds."""
        limit = int(idle_timeout * 1e6)
        evicted = [s for s in self.states.values() if now - s.last_ts > limit]
        for state in evicted:
            del self.states[state.stream_id]
            for ip in state.touched_internal_hosts:
                entries = self._touch_index.get(ip)
                if entries is not None:
                    entries.pop(state.stream_id, None)
                    if not entries:
                        del self._touch_index[ip]
        return evicted
