"""Set-associative cache model with prefetch fill timing.

Time is measured in demand-access ticks (the trace index), not cycles.
Latencies are bookkeeping attached to each access outcome; the prefetch
queue holds in-flight lines that become resident a fixed number of ticks
after they were enqueued. Every access is classified as a hit, a prefetch
hit (first demand touch of a prefetched line), a late prefetch hit (demand
to a line still in flight), or a miss; everything except a plain hit is a
prefetch activation event (PAE) and is what drives the prefetchers.
"""

from collections import deque
from dataclasses import dataclass
from typing import NamedTuple

HIT = "hit"
PREFETCH_HIT = "prefetch_hit"
LATE_PREFETCH_HIT = "late_prefetch_hit"
MISS = "miss"

OUTCOME_KINDS = (HIT, PREFETCH_HIT, LATE_PREFETCH_HIT, MISS)


class AccessEvent(NamedTuple):
    pc: int
    addr: int
    is_write: bool
    seq: int


class AccessOutcome(NamedTuple):
    kind: str
    latency: int
    is_pae: bool


class InFlightPrefetch(NamedTuple):
    line: int
    issue_seq: int
    fill_seq: int
    source: str


def _is_pow2(x: int) -> bool:
    return x > 0 and (x & (x - 1)) == 0


@dataclass
class CacheConfig:
    """Geometry and timing; defaults are a 32 KiB, 8-way, L1-like cache."""
    sets: int = 64
    ways: int = 8
    line_size: int = 64
    hit_latency: int = 4
    miss_latency: int = 200
    late_latency: int = 100          # demand to an in-flight line
    prefetch_fill_delay: int = 40    # ticks from enqueue to resident
    prefetch_queue_capacity: int = 16

    def validate(self) -> "CacheConfig":
        if not _is_pow2(self.sets):
            raise ValueError("sets must be a power of two")
        if not _is_pow2(self.line_size):
            raise ValueError("line_size must be a power of two")
        if self.ways < 1:
            raise ValueError("ways must be >= 1")
        if not (self.hit_latency < self.late_latency <= self.miss_latency):
            raise ValueError("require hit_latency < late_latency <= miss_latency")
        if self.prefetch_fill_delay < 0:
            raise ValueError("prefetch_fill_delay must be >= 0")
        if self.prefetch_queue_capacity < 0:
            raise ValueError("prefetch_queue_capacity must be >= 0")
        return self

    @property
    def line_shift(self) -> int:
        return self.line_size.bit_length() - 1

    @property
    def max_line(self) -> int:
        # address space is 64-bit bytes; lines above this are unreachable
        return (1 << (64 - self.line_shift)) - 1


class SetAssociativeCache:
    """LRU set-associative cache plus an in-flight prefetch list.

    Line state per set: line -> [prefetched_flag, lru_stamp, source].
    The LRU stamp is an internal monotone touch counter so that stamps stay
    distinct even when several prefetch fills land on the same tick.
    """

    def __init__(self, config: CacheConfig):
        self.config = config.validate()
        self._shift = config.line_shift
        self._set_mask = config.sets - 1
        self._ways = config.ways
        self._sets: list[dict[int, list]] = [dict() for _ in range(config.sets)]
        self._inflight: dict[int, list] = {}   # line -> [fill_seq, source]
        self._fifo: deque[tuple[int, int]] = deque()  # (line, fill_seq), fill order
        self._stamp = 0
        cfg = self.config
        self._out_hit = AccessOutcome(HIT, cfg.hit_latency, False)
        self._out_pf = AccessOutcome(PREFETCH_HIT, cfg.hit_latency, True)
        self._out_late = AccessOutcome(LATE_PREFETCH_HIT, cfg.late_latency, True)
        self._out_miss = AccessOutcome(MISS, cfg.miss_latency, True)
        # demand outcome counters
        self.hits = 0
        self.prefetch_hits = 0
        self.late_prefetch_hits = 0
        self.misses = 0
        # prefetch queue counters
        self.pf_attempted = 0
        self.pf_accepted = 0
        self.pf_dropped_resident = 0
        self.pf_dropped_in_flight = 0
        self.pf_dropped_queue_full = 0
        self.pf_filled = 0
        self.pf_late_converted = 0
        self.evictions = 0
        self.evicted_unused_prefetches = 0
        self.useful_by_source: dict[str, int] = {}
        self.filled_by_source: dict[str, int] = {}

    def line_of(self, addr: int) -> int:
        return addr >> self._shift

    def is_resident(self, line: int) -> bool:
        return line in self._sets[line & self._set_mask]

    def in_flight(self, line: int) -> bool:
        return line in self._inflight

    @property
    def in_flight_count(self) -> int:
        return len(self._inflight)

    def _install(self, line: int, prefetched: bool, source, stamp: int) -> None:
        lines = self._sets[line & self._set_mask]
        if len(lines) >= self._ways and line not in lines:
            victim = min(lines, key=lambda l: lines[l][1])
            state = lines.pop(victim)
            self.evictions += 1
            if state[0]:
                self.evicted_unused_prefetches += 1
        lines[line] = [prefetched, stamp, source]

    def access(self, event: AccessEvent) -> AccessOutcome:
        """Classify one demand access and update cache state.

        Callers must drain due fills first (fill_due with the event's seq).
        """
        line = event.addr >> self._shift
        lines = self._sets[line & self._set_mask]
        self._stamp = stamp = self._stamp + 1
        entry = lines.get(line)
        if entry is not None:
            entry[1] = stamp
            if entry[0]:
                # a prefetched line yields exactly one prefetch hit
                entry[0] = False
                self.prefetch_hits += 1
                src = entry[2]
                self.useful_by_source[src] = self.useful_by_source.get(src, 0) + 1
                return self._out_pf
            self.hits += 1
            return self._out_hit
        pending = self._inflight.pop(line, None)
        if pending is not None:
            # near-miss: the in-flight entry becomes this demand's fill
            self.late_prefetch_hits += 1
            self.pf_late_converted += 1
            self._install(line, False, None, stamp)
            return self._out_late
        self.misses += 1
        self._install(line, False, None, stamp)
        return self._out_miss

    def enqueue_prefetch(self, line: int, source: str, now: int) -> bool:
        """Queue a line for prefetch; False when deduped or the queue is full."""
        self.pf_attempted += 1
        if line in self._sets[line & self._set_mask]:
            self.pf_dropped_resident += 1
            return False
        if line in self._inflight:
            self.pf_dropped_in_flight += 1
            return False
        if len(self._inflight) >= self.config.prefetch_queue_capacity:
            self.pf_dropped_queue_full += 1
            return False
        fill_seq = now + self.config.prefetch_fill_delay
        self._inflight[line] = [fill_seq, source]
        self._fifo.append((line, fill_seq))
        self.pf_accepted += 1
        return True

    def fill_due(self, now: int) -> int:
        """Install every in-flight prefetch whose fill time has arrived."""
        fifo = self._fifo
        inflight = self._inflight
        filled = 0
        while fifo:
            line, fill_seq = fifo[0]
            if fill_seq > now:
                break
            fifo.popleft()
            entry = inflight.get(line)
            if entry is None or entry[0] != fill_seq:
                continue  # stale: converted to a demand fill in the meantime
            del inflight[line]
            self._stamp = stamp = self._stamp + 1
            self._install(line, True, entry[1], stamp)
            self.pf_filled += 1
            src = entry[1]
            self.filled_by_source[src] = self.filled_by_source.get(src, 0) + 1
            filled += 1
        return filled

    def in_flight_entries(self) -> list[InFlightPrefetch]:
        out = []
        for line, (fill_seq, source) in self._inflight.items():
            out.append(InFlightPrefetch(
                line, fill_seq - self.config.prefetch_fill_delay, fill_seq, source))
        return out

    def demand_counts(self) -> dict[str, int]:
        return {
            "total": self.hits + self.prefetch_hits + self.late_prefetch_hits + self.misses,
            "hits": self.hits,
            "prefetch_hits": self.prefetch_hits,
            "late_prefetch_hits": self.late_prefetch_hits,
            "misses": self.misses,
        }

    def prefetch_counts(self) -> dict[str, int]:
        return {
            "attempted": self.pf_attempted,
            "accepted": self.pf_accepted,
            "dropped_resident": self.pf_dropped_resident,
            "dropped_in_flight": self.pf_dropped_in_flight,
            "dropped_queue_full": self.pf_dropped_queue_full,
            "filled": self.pf_filled,
            "late_converted": self.pf_late_converted,
            "in_flight_at_end": len(self._inflight),
            "evictions": self.evictions,
            "evicted_unused_prefetches": self.evicted_unused_prefetches,
        }


def amat(counts: dict[str, int], config: CacheConfig) -> float:
    """Average memory access time in cycles for a run's outcome counts."""
    total = (counts.get("hits", 0) + counts.get("prefetch_hits", 0)
             + counts.get("late_prefetch_hits", 0) + counts.get("misses", 0))
    if total == 0:
        raise ValueError("empty statistics")
    cycles = ((counts.get("hits", 0) + counts.get("prefetch_hits", 0)) * config.hit_latency
              + counts.get("late_prefetch_hits", 0) * config.late_latency
              + counts.get("misses", 0) * config.miss_latency)
    return cycles / total
