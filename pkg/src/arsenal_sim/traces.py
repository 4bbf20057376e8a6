"""Trace ingestion and synthetic access-pattern generation.

Trace files are plain text, one demand access per line: ``PC ADDR R|W``
with 0x-prefixed hex fields; ``#`` starts a comment line. Synthetic
patterns cover the access shapes the simulator cares about: sequential
streams, fixed strides, random working sets, interleaved per-PC delta
streams, and phased concatenations of the above. Generation is fully
deterministic given the pattern spec and its seed.
"""

import random
from dataclasses import dataclass, field, asdict
from typing import Iterable, Iterator

from .cache import AccessEvent

SEQUENTIAL = "sequential"
STRIDE = "stride"
RANDOM_WORKING_SET = "random_working_set"
PC_DELTA = "pc_delta"
PHASED = "phased"

PATTERN_KINDS = (SEQUENTIAL, STRIDE, RANDOM_WORKING_SET, PC_DELTA, PHASED)


class TraceParseError(ValueError):
    def __init__(self, line_number: int, message: str):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


def parse_trace(stream: Iterable[str]) -> Iterator[AccessEvent]:
    """Yield AccessEvents from a text trace, assigning seq 0, 1, 2, ..."""
    seq = 0
    for line_number, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 3:
            raise TraceParseError(line_number, f"expected 'PC ADDR R|W', got {line!r}")
        try:
            pc = int(parts[0], 16)
            addr = int(parts[1], 16)
        except ValueError:
            raise TraceParseError(line_number, f"bad hex field in {line!r}") from None
        op = parts[2].upper()
        if op not in ("R", "W"):
            raise TraceParseError(line_number, f"op must be R or W, got {parts[2]!r}")
        yield AccessEvent(pc, addr, op == "W", seq)
        seq += 1


def parse_trace_file(path: str) -> list[AccessEvent]:
    with open(path, "r", encoding="utf-8") as fh:
        return list(parse_trace(fh))


def write_trace(events: Iterable[AccessEvent], sink) -> int:
    """Write events in the text trace format; returns the record count."""
    n = 0
    for ev in events:
        sink.write(f"0x{ev.pc:x} 0x{ev.addr:x} {'W' if ev.is_write else 'R'}\n")
        n += 1
    return n


@dataclass
class PatternSpec:
    """One synthetic access pattern.

    kind-specific fields:
      sequential: start, pc_pool (PCs drawn at random per access)
      stride: start, stride (bytes, nonzero), pc (fixed)
      random_working_set: start, working_set_lines, pc_pool, write_fraction
      pc_delta: streams = [{pc, start, delta}, ...], visited round-robin
      phased: segments = [{"spec": {...}, "length": n}, ...]
    """
    kind: str
    start: int = 0
    stride: int = 256
    pc: int = 0x400
    pc_pool: int = 8
    working_set_lines: int = 4096
    write_fraction: float = 0.0
    line_size: int = 64
    streams: list = field(default_factory=list)
    segments: list = field(default_factory=list)
    seed: int = 0

    def validate(self) -> "PatternSpec":
        if self.kind not in PATTERN_KINDS:
            raise ValueError(f"unknown pattern kind: {self.kind!r}")
        if self.kind == STRIDE and self.stride == 0:
            raise ValueError("stride must be nonzero")
        if self.kind == PC_DELTA and not self.streams:
            raise ValueError("pc_delta requires at least one stream")
        if self.kind == RANDOM_WORKING_SET and self.working_set_lines < 1:
            raise ValueError("working_set_lines must be >= 1")
        if self.kind == PHASED:
            if not self.segments:
                raise ValueError("phased requires at least one segment")
            for seg in self.segments:
                if int(seg.get("length", 0)) <= 0:
                    raise ValueError("phased segment lengths must be positive")
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "PatternSpec":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown pattern fields: {sorted(unknown)}")
        return cls(**data).validate()


def _pc_pool(spec: PatternSpec) -> list[int]:
    return [spec.pc + 8 * i for i in range(max(1, spec.pc_pool))]


def _generate_flat(spec: PatternSpec, length: int, seq_base: int,
                   rng: random.Random) -> Iterator[AccessEvent]:
    kind = spec.kind
    if kind == SEQUENTIAL:
        pool = _pc_pool(spec)
        addr = spec.start
        step = spec.line_size
        for i in range(length):
            yield AccessEvent(pool[rng.randrange(len(pool))], addr, False, seq_base + i)
            addr += step
    elif kind == STRIDE:
        addr = spec.start
        for i in range(length):
            yield AccessEvent(spec.pc, addr, False, seq_base + i)
            addr += spec.stride
    elif kind == RANDOM_WORKING_SET:
        pool = _pc_pool(spec)
        base_line = spec.start // spec.line_size
        ws = spec.working_set_lines
        wf = spec.write_fraction
        lsz = spec.line_size
        for i in range(length):
            line = base_line + rng.randrange(ws)
            is_write = wf > 0.0 and rng.random() < wf
            yield AccessEvent(pool[rng.randrange(len(pool))], line * lsz,
                              is_write, seq_base + i)
    elif kind == PC_DELTA:
        cursors = [[int(s["pc"]), int(s["start"]), int(s["delta"])]
                   for s in spec.streams]
        n = len(cursors)
        for i in range(length):
            cur = cursors[i % n]
            yield AccessEvent(cur[0], cur[1], False, seq_base + i)
            cur[1] += cur[2]
    else:
        raise ValueError(f"not a flat pattern kind: {kind!r}")


def generate(spec: PatternSpec, length: int) -> Iterator[AccessEvent]:
    """Deterministically generate ``length`` events for a pattern spec."""
    spec.validate()
    if spec.kind != PHASED:
        rng = random.Random(spec.seed)
        yield from _generate_flat(spec, length, 0, rng)
        return
    seq = 0
    remaining = length
    index = 0
    while remaining > 0:
        seg = spec.segments[index % len(spec.segments)]
        sub = PatternSpec.from_dict(dict(seg["spec"]))
        seg_len = min(int(seg["length"]), remaining)
        rng = random.Random((spec.seed << 16) ^ index)
        yield from _generate_flat(sub, seg_len, seq, rng)
        seq += seg_len
        remaining -= seg_len
        index += 1


def phase_boundaries(spec: PatternSpec, length: int) -> list[dict]:
    """Segment layout of a phased pattern: [{kind, start, end}, ...]."""
    spec.validate()
    if spec.kind != PHASED:
        return [{"kind": spec.kind, "start": 0, "end": length}]
    out = []
    seq = 0
    index = 0
    remaining = length
    while remaining > 0:
        seg = spec.segments[index % len(spec.segments)]
        seg_len = min(int(seg["length"]), remaining)
        out.append({"kind": seg["spec"]["kind"], "start": seq, "end": seq + seg_len})
        seq += seg_len
        remaining -= seg_len
        index += 1
    return out
