"""Component prefetchers behind a uniform shadow interface.

Every prefetcher exposes ``on_pae(ctx) -> list[int]``: given the context of
one prefetch activation event (a miss or prefetch hit), return zero or more
candidate line addresses. Prefetchers never look at cache contents or at
each other; replaying the same PAE sequence yields the same candidates.

Five components: next-line with a score-driven degree, an IP-indexed stride
predictor, a signature-path predictor with recursive lookahead (spp), a
multi-lookahead offset scorer (mlop), and a PC-indexed delta predictor that
delays its issue to match the learned trigger-to-use distance (tskid).
"""

import heapq
from typing import NamedTuple

DEFAULT_MAX_LINE = (1 << 58) - 1  # 64-bit byte addresses, 64-byte lines


class PaeContext(NamedTuple):
    pc: int
    line: int
    seq: int
    outcome_kind: str


class NextLinePrefetcher:
    """Prefetch the next ``degree`` lines after every trigger.

    The degree follows the component's sandbox score: 1 + score // divisor,
    clamped to [1, max_degree].
    """

    def __init__(self, degree: int = 1, max_degree: int = 5,
                 degree_divisor: int = 512, max_line: int = DEFAULT_MAX_LINE):
        if not (1 <= degree <= max_degree):
            raise ValueError("degree out of range")
        self.degree = degree
        self.max_degree = max_degree
        self.degree_divisor = degree_divisor
        self.max_line = max_line

    def set_degree(self, score: int) -> None:
        d = 1 + score // self.degree_divisor
        self.degree = max(1, min(self.max_degree, d))

    def on_pae(self, ctx: PaeContext) -> list[int]:
        line = ctx.line
        top = min(line + self.degree, self.max_line)
        return list(range(line + 1, top + 1))


def _train_stride(entry: list, delta: int) -> None:
    # entry: [last_line, stride, confidence]; saturating confidence in [0, 3].
    # A mismatch that exhausts confidence re-learns: store the new delta and
    # restart at confidence 1, mirroring the first observation of a stride.
    if delta == entry[1]:
        if entry[2] < 3:
            entry[2] += 1
    else:
        entry[2] = entry[2] - 1 if entry[2] > 0 else 0
        if entry[2] == 0:
            entry[1] = delta
            entry[2] = 1


class IpStridePrefetcher:
    """Per-PC stride table: 64 LRU entries, degree-8 strided candidates."""

    def __init__(self, table_size: int = 64, degree: int = 8,
                 max_line: int = DEFAULT_MAX_LINE):
        self.table_size = table_size
        self.degree = degree
        self.max_line = max_line
        # pc -> [last_line, stride, confidence, lru_stamp]
        self.table: dict[int, list] = {}
        self._stamp = 0

    def on_pae(self, ctx: PaeContext) -> list[int]:
        self._stamp += 1
        entry = self.table.get(ctx.pc)
        if entry is None:
            if len(self.table) >= self.table_size:
                victim = min(self.table, key=lambda pc: self.table[pc][3])
                del self.table[victim]
            self.table[ctx.pc] = [ctx.line, 0, 0, self._stamp]
            return []
        delta = ctx.line - entry[0]
        _train_stride(entry, delta)
        entry[0] = ctx.line
        entry[3] = self._stamp
        stride = entry[1]
        if entry[2] >= 2 and stride != 0:
            max_line = self.max_line
            out = []
            cand = ctx.line
            for _ in range(self.degree):
                cand += stride
                if 0 <= cand <= max_line:
                    out.append(cand)
            return out
        return []


def _encode_delta(delta: int) -> int:
    # sign-magnitude, 7 bits: bit 6 sign, bits 0-5 magnitude
    if delta < 0:
        return 0x40 | (-delta)
    return delta


class SppPrefetcher:
    """Signature-path predictor with recursive lookahead.

    Per page, a 12-bit signature compresses the recent in-page delta history
    (sig' = ((sig << 3) XOR encode(delta)) mod 2^12). The pattern table maps
    signatures to up to four observed deltas with confidence counters; the
    lookahead loop walks the table from the page's updated signature,
    multiplying per-step confidence into a path confidence and emitting
    predicted lines until the path drops below threshold, the chain reaches
    its depth cap, or it steps off the page (which parks a resume point in
    the global history register so the next page can pick the path up).
    """

    SIG_MASK = 0xFFF
    SIG_SHIFT = 3

    def __init__(self, st_entries: int = 256, pt_entries: int = 512,
                 pt_slots: int = 4, counter_max: int = 15,
                 ghr_entries: int = 8, lookahead_depth: int = 8,
                 confidence_threshold: float = 0.25,
                 page_lines: int = 64, max_line: int = DEFAULT_MAX_LINE):
        self.st_entries = st_entries
        self.pt_entries = pt_entries
        self.pt_slots = pt_slots
        self.counter_max = counter_max
        self.ghr_entries = ghr_entries
        self.lookahead_depth = lookahead_depth
        self.confidence_threshold = confidence_threshold
        self.page_lines = page_lines
        self.max_line = max_line
        # page -> [signature, last_offset, lru_stamp]
        self.signature_table: dict[int, list] = {}
        # pt index -> [c_sig, slots]; slot = [delta, c_delta]
        self.pattern_table: dict[int, list] = {}
        # ring of [signature, path_confidence, last_offset, delta]
        self.ghr: list[list] = []
        self._stamp = 0
        # chain instrumentation, checked by the acceptance suite
        self.max_chain_depth = 0
        self.confidence_violations = 0

    def _update_signature(self, sig: int, delta: int) -> int:
        return ((sig << self.SIG_SHIFT) ^ _encode_delta(delta)) & self.SIG_MASK

    def _train(self, sig: int, delta: int) -> None:
        idx = sig % self.pt_entries
        entry = self.pattern_table.get(idx)
        if entry is None:
            entry = [0, []]
            self.pattern_table[idx] = entry
        if entry[0] >= self.counter_max:
            # keep ratios meaningful: halve everything before counting on
            entry[0] >>= 1
            for slot in entry[1]:
                slot[1] >>= 1
        entry[0] += 1
        slots = entry[1]
        for slot in slots:
            if slot[0] == delta:
                if slot[1] < self.counter_max:
                    slot[1] += 1
                return
        if len(slots) < self.pt_slots:
            slots.append([delta, 1])
        else:
            weakest = min(range(len(slots)), key=lambda i: slots[i][1])
            slots[weakest] = [delta, 1]

    def _best_slot(self, sig: int):
        entry = self.pattern_table.get(sig % self.pt_entries)
        if entry is None or entry[0] == 0 or not entry[1]:
            return None
        # deterministic: max confidence, then smallest |delta|, then positive
        best = max(entry[1], key=lambda s: (s[1], -abs(s[0]), s[0] > 0))
        return best[0], best[1], entry[0]

    def _ghr_bootstrap(self, offset: int) -> int | None:
        page_lines = self.page_lines
        for rec in reversed(self.ghr):
            target = rec[2] + rec[3]
            if target >= page_lines and target - page_lines == offset:
                return self._update_signature(rec[0], rec[3])
            if target < 0 and target + page_lines == offset:
                return self._update_signature(rec[0], rec[3])
        return None

    def _ghr_push(self, sig: int, confidence: float, offset: int, delta: int) -> None:
        if len(self.ghr) >= self.ghr_entries:
            self.ghr.pop(0)
        self.ghr.append([sig, confidence, offset, delta])

    def on_pae(self, ctx: PaeContext) -> list[int]:
        self._stamp += 1
        page_lines = self.page_lines
        page, offset = divmod(ctx.line, page_lines)
        st = self.signature_table
        entry = st.get(page)
        if entry is None:
            boot = self._ghr_bootstrap(offset)
            if len(st) >= self.st_entries:
                victim = min(st, key=lambda p: st[p][2])
                del st[victim]
            sig = boot if boot is not None else 0
            st[page] = [sig, offset, self._stamp]
        else:
            delta = offset - entry[1]
            sig = entry[0]
            if delta != 0 and abs(delta) < page_lines:
                self._train(sig, delta)
                sig = self._update_signature(sig, delta)
            entry[0] = sig
            entry[1] = offset
            entry[2] = self._stamp
        return self._lookahead(sig, page, offset)

    def _lookahead(self, sig: int, page: int, offset: int) -> list[int]:
        threshold = self.confidence_threshold
        page_lines = self.page_lines
        page_base = page * page_lines
        confidence = 1.0
        out = []
        depth = 0
        while depth < self.lookahead_depth:
            found = self._best_slot(sig)
            if found is None:
                break
            delta, c_delta, c_sig = found
            step = c_delta / c_sig
            if step > 1.0:
                self.confidence_violations += 1
            confidence *= step
            if confidence < threshold:
                break
            nxt = offset + delta
            if nxt < 0 or nxt >= page_lines:
                self._ghr_push(sig, confidence, offset, delta)
                break
            cand = page_base + nxt
            if cand > self.max_line:
                break
            out.append(cand)
            depth += 1
            sig = self._update_signature(sig, delta)
            offset = nxt
        if depth > self.max_chain_depth:
            self.max_chain_depth = depth
        return out


class MlopPrefetcher:
    """Offset scorer over per-zone access bitmaps with lookahead levels.

    Each 4 KiB zone keeps a 64-bit touch bitmap and per-line touch times.
    For a trigger at in-zone index x, offset o earns a point at lookahead
    level l when line x-o was touched at least l PAEs ago (the offset would
    have predicted this access l-or-more triggers in advance). Every ROUND
    triggers, the best offset per level (ties: smaller magnitude, positive
    first) is selected if it clears the score threshold; the deduplicated
    selection is what gets emitted until the next round completes.
    """

    def __init__(self, zones: int = 64, levels: int = 8, max_offset: int = 16,
                 round_paes: int = 256, score_threshold: int = 16,
                 zone_lines: int = 64, max_line: int = DEFAULT_MAX_LINE):
        self.zones = zones
        self.levels = levels
        self.max_offset = max_offset
        self.round_paes = round_paes
        self.score_threshold = score_threshold
        self.zone_lines = zone_lines
        self.max_line = max_line
        # zone -> [bitmap, stamps, lru_stamp]
        self.zone_table: dict[int, list] = {}
        # preference order for ties: 1, -1, 2, -2, ...
        self._offsets = [o for mag in range(1, max_offset + 1) for o in (mag, -mag)]
        self.scores = {o: [0] * (levels + 1) for o in self._offsets}
        self.selected_offsets: list[int] = []
        self.round_counter = 0
        self._pae_count = 0

    def _end_round(self) -> None:
        chosen = []
        for level in range(1, self.levels + 1):
            best_offset = None
            best_score = self.score_threshold - 1
            for o in self._offsets:
                s = self.scores[o][level]
                if s > best_score:
                    best_score = s
                    best_offset = o
            if best_offset is not None and best_offset not in chosen:
                chosen.append(best_offset)
        self.selected_offsets = chosen
        for o in self._offsets:
            self.scores[o] = [0] * (self.levels + 1)
        self.round_counter = 0

    def on_pae(self, ctx: PaeContext) -> list[int]:
        self._pae_count = now = self._pae_count + 1
        zone_lines = self.zone_lines
        zone, x = divmod(ctx.line, zone_lines)
        table = self.zone_table
        entry = table.get(zone)
        if entry is None:
            if len(table) >= self.zones:
                victim = min(table, key=lambda z: table[z][2])
                del table[victim]
            entry = [0, [0] * zone_lines, now]
            table[zone] = entry
        else:
            entry[2] = now
        bitmap, stamps = entry[0], entry[1]
        levels = self.levels
        scores = self.scores
        for o in self._offsets:
            j = x - o
            if 0 <= j < zone_lines and (bitmap >> j) & 1:
                age = now - stamps[j]
                top = age if age < levels else levels
                col = scores[o]
                for level in range(1, top + 1):
                    col[level] += 1
        entry[0] = bitmap | (1 << x)
        stamps[x] = now
        self.round_counter += 1
        if self.round_counter >= self.round_paes:
            self._end_round()
        if not self.selected_offsets:
            return []
        line = ctx.line
        max_line = self.max_line
        out = []
        for o in self.selected_offsets:
            nxt = x + o
            if 0 <= nxt < zone_lines:
                cand = line + o
                if 0 <= cand <= max_line:
                    out.append(cand)
        return out


class TskidPrefetcher:
    """PC-indexed delta predictor that times its issue.

    Like the stride table, but each prediction is verified against later
    demands to learn the trigger-to-use distance for that PC; subsequent
    predictions are parked in a delay queue and released that many ticks
    (minus a fixed lead) after their trigger.
    """

    def __init__(self, table_size: int = 64, lead: int = 4,
                 verification_expiry: int = 1024,
                 max_line: int = DEFAULT_MAX_LINE):
        self.table_size = table_size
        self.lead = lead
        self.verification_expiry = verification_expiry
        self.max_line = max_line
        # pc -> [last_line, delta, confidence, use_distance, lru_stamp]
        self.table: dict[int, list] = {}
        self._stamp = 0
        self._delay_queue: list[tuple[int, int, int]] = []  # (release_seq, tie, line)
        self._tie = 0
        # predicted_line -> (pc, trigger_seq); FIFO ring for expiry
        self._pending: dict[int, tuple[int, int]] = {}
        self._pending_fifo: list[tuple[int, int]] = []  # (trigger_seq, line)
        self._pending_head = 0

    def _expire_pending(self, now: int) -> None:
        fifo = self._pending_fifo
        head = self._pending_head
        horizon = now - self.verification_expiry
        while head < len(fifo) and fifo[head][0] < horizon:
            trigger_seq, line = fifo[head]
            head += 1
            rec = self._pending.get(line)
            if rec is not None and rec[1] == trigger_seq:
                del self._pending[line]
        if head > 64 and head * 2 > len(fifo):
            del fifo[:head]
            head = 0
        self._pending_head = head

    def _release_due(self, now: int, out: list[int]) -> None:
        dq = self._delay_queue
        while dq and dq[0][0] <= now:
            out.append(heapq.heappop(dq)[2])

    def on_pae(self, ctx: PaeContext) -> list[int]:
        self._stamp += 1
        now = ctx.seq
        out: list[int] = []
        self._release_due(now, out)
        self._expire_pending(now)
        rec = self._pending.pop(ctx.line, None)
        if rec is not None:
            pc, trigger_seq = rec
            owner = self.table.get(pc)
            if owner is not None:
                owner[3] = now - trigger_seq
        entry = self.table.get(ctx.pc)
        if entry is None:
            if len(self.table) >= self.table_size:
                victim = min(self.table, key=lambda pc: self.table[pc][4])
                del self.table[victim]
            self.table[ctx.pc] = [ctx.line, 0, 0, 0, self._stamp]
            return out
        delta = ctx.line - entry[0]
        _train_stride(entry, delta)
        entry[0] = ctx.line
        entry[4] = self._stamp
        if entry[2] >= 2 and entry[1] != 0:
            predicted = ctx.line + entry[1]
            if 0 <= predicted <= self.max_line:
                release = now + max(0, entry[3] - self.lead)
                self._tie += 1
                heapq.heappush(self._delay_queue, (release, self._tie, predicted))
                self._pending[predicted] = (ctx.pc, now)
                self._pending_fifo.append((now, predicted))
                self._release_due(now, out)  # untrained timing issues immediately
        return out
