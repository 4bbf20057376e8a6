"""Meta-prefetcher: shadow-evaluate components, score them, deploy the best.

Every PAE runs through three stages. First the demanded line is checked
against each component's Bloom filter and the component's score moves up on
a match (it predicted this demand) or down on a miss. Then every component
generates candidates for the event; the candidates land in that component's
filter and bump its counters. Only the currently-selected component's
candidates are forwarded to the real prefetch queue. Once every evaluation
counter reaches the phase length, a selection rule picks the next live
component and the sandbox state (filters, counters, scores) resets; the
selection itself persists through the following phase.
"""

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

from .bloom import component_seed, make_filter
from .prefetchers import (
    DEFAULT_MAX_LINE,
    IpStridePrefetcher,
    MlopPrefetcher,
    NextLinePrefetcher,
    PaeContext,
    SppPrefetcher,
    TskidPrefetcher,
)

TSKID = "tskid"
MLOP = "mlop"
SPP = "spp"
IP_STRIDE = "ip_stride"
NEXT_LINE = "next_line"

TEST_CASE_1 = "tc1"
TEST_CASE_2 = "tc2"

SCORE_MAX = 2047        # 11-bit saturating score
PREFETCH_COUNTER_MAX = 4095  # 12-bit saturating attempt counter


class PrefetchRequest(NamedTuple):
    line: int
    source: str
    issue_seq: int


class Selection(NamedTuple):
    chosen: Optional[str]
    phase_index: int
    decided_at: int


@dataclass
class ArsenalConfig:
    """Sandbox thresholds; defaults follow the published operating point."""
    score_inc: int = 4
    score_dec: int = 1
    min_score: int = 0
    next_line_min_score: int = 1500
    eval_cnt: int = 512
    tskid_selection_attempt: int = 10000
    bf_fpp: float = 0.01
    bf_est_cap: int = 2000
    selection_policy: str = TEST_CASE_2
    filter_kind: str = "bloom"   # bloom | exact | paired
    master_seed: int = 0xA5EE
    component_params: dict = field(default_factory=dict)

    def validate(self) -> "ArsenalConfig":
        if self.selection_policy not in (TEST_CASE_1, TEST_CASE_2):
            raise ValueError(f"unknown selection policy: {self.selection_policy!r}")
        if self.filter_kind not in ("bloom", "exact", "paired"):
            raise ValueError(f"unknown filter kind: {self.filter_kind!r}")
        if self.eval_cnt < 1:
            raise ValueError("eval_cnt must be >= 1")
        if self.bf_est_cap < 1 or not (0.0 < self.bf_fpp < 1.0):
            raise ValueError("bad bloom filter parameters")
        return self


def select_test_case_1(scores: dict, prefetch_counters: dict,
                       previous: Optional[str],
                       attempt_threshold: int = 10000) -> Optional[str]:
    """Two-component rule (tskid vs mlop), clauses applied in order."""
    if scores[TSKID] > scores[MLOP] or prefetch_counters[TSKID] > attempt_threshold:
        return TSKID
    if scores[MLOP] > scores[TSKID] or prefetch_counters[MLOP] == prefetch_counters[TSKID]:
        return MLOP
    return previous


def select_test_case_2(scores: dict, min_score: int = 0,
                       next_line_min_score: int = 1500) -> Optional[str]:
    """Three-component rule (spp vs ip_stride vs next_line).

    spp/ip_stride win whenever their best score at least matches next-line's
    and clears min_score; next-line needs to be strictly on top and above
    its own, much higher threshold. Ties between spp and ip_stride go to spp.
    """
    spp, ip, nl = scores[SPP], scores[IP_STRIDE], scores[NEXT_LINE]
    best_si = max(spp, ip)
    si_pick = SPP if spp >= ip else IP_STRIDE
    if best_si >= nl and best_si > min_score:
        return si_pick
    if nl > best_si:
        if nl > next_line_min_score:
            return NEXT_LINE
        if best_si > min_score:
            return si_pick
    return None


def build_components(policy: str, component_params: dict | None = None,
                     max_line: int = DEFAULT_MAX_LINE) -> dict:
    """Instantiate the component roster for a selection policy."""
    params = component_params or {}

    def kw(name):
        return dict(params.get(name, {}), max_line=max_line)

    if policy == TEST_CASE_1:
        return {
            TSKID: TskidPrefetcher(**kw(TSKID)),
            MLOP: MlopPrefetcher(**kw(MLOP)),
        }
    if policy == TEST_CASE_2:
        return {
            SPP: SppPrefetcher(**kw(SPP)),
            IP_STRIDE: IpStridePrefetcher(**kw(IP_STRIDE)),
            NEXT_LINE: NextLinePrefetcher(**kw(NEXT_LINE)),
        }
    raise ValueError(f"unknown selection policy: {policy!r}")


class Arsenal:
    """The framework: components, per-component filters, scoreboard, phases."""

    def __init__(self, config: ArsenalConfig | None = None,
                 components: dict | None = None,
                 max_line: int = DEFAULT_MAX_LINE,
                 record_log: bool = False):
        self.config = (config or ArsenalConfig()).validate()
        if components is None:
            components = build_components(
                self.config.selection_policy, self.config.component_params, max_line)
        self.components = components
        self.names = list(components.keys())
        self.filters = {
            name: make_filter(self.config.filter_kind, self.config.bf_est_cap,
                              self.config.bf_fpp,
                              component_seed(self.config.master_seed, i))
            for i, name in enumerate(self.names)
        }
        # per component: [eval_counter, prefetch_counter, score]
        self.scoreboard = {name: [0, 0, 0] for name in self.names}
        self.selection = Selection(None, 0, 0)
        self.selection_timeline: list[dict] = []
        self.total_candidates = {name: 0 for name in self.names}
        self._paes_since_reset = 0
        self.record_log = record_log
        self.pae_log: list[dict] = []

    def score_demand(self, line: int, _record: dict | None = None) -> dict[str, int]:
        """Score the demanded line against every filter; returns the deltas."""
        cfg = self.config
        deltas = {}
        for name in self.names:
            f = self.filters[name]
            result = f.query(line)
            if _record is not None:
                _record[name] = (result, getattr(f, "last_query_was_fp", False))
            sb = self.scoreboard[name]
            before = sb[2]
            if result:
                sb[2] = min(SCORE_MAX, before + cfg.score_inc)
            else:
                sb[2] = max(0, before - cfg.score_dec)
            deltas[name] = sb[2] - before
        return deltas

    def on_pae(self, ctx: PaeContext) -> list[PrefetchRequest]:
        cfg = self.config
        scoreboard = self.scoreboard
        log_entry = None
        if self.record_log:
            log_entry = {"seq": ctx.seq, "line": ctx.line,
                         "queries": {}, "candidates": {}, "decision": None}
            self.score_demand(ctx.line, log_entry["queries"])
        else:
            self.score_demand(ctx.line)

        selected = self.selection.chosen
        filters = self.filters
        live: list[int] = []
        eval_cap = cfg.eval_cnt
        for name in self.names:
            candidates = self.components[name].on_pae(ctx)
            sb = scoreboard[name]
            if sb[0] < eval_cap:
                sb[0] += 1
            if candidates:
                n = len(candidates)
                self.total_candidates[name] += n
                sb[1] = min(PREFETCH_COUNTER_MAX, sb[1] + n)
                f = filters[name]
                for c in candidates:
                    f.insert(c)
                if name == selected:
                    live = candidates
            if log_entry is not None:
                log_entry["candidates"][name] = tuple(candidates)

        out = [PrefetchRequest(line, selected, ctx.seq) for line in live]

        self._paes_since_reset += 1
        if self._paes_since_reset >= cfg.eval_cnt:
            self._decide(ctx.seq)
            if log_entry is not None:
                log_entry["decision"] = self.selection.chosen
        if log_entry is not None:
            log_entry["scores"] = {n: scoreboard[n][2] for n in self.names}
            self.pae_log.append(log_entry)
        return out

    def _decide(self, decided_at: int) -> None:
        cfg = self.config
        scores = {n: self.scoreboard[n][2] for n in self.names}
        counters = {n: self.scoreboard[n][1] for n in self.names}
        evals = {n: self.scoreboard[n][0] for n in self.names}
        if cfg.selection_policy == TEST_CASE_1:
            chosen = select_test_case_1(scores, counters, self.selection.chosen,
                                        cfg.tskid_selection_attempt)
        else:
            chosen = select_test_case_2(scores, cfg.min_score,
                                        cfg.next_line_min_score)
        phase_index = self.selection.phase_index + 1
        self.selection_timeline.append({
            "phase_index": phase_index,
            "decided_at": decided_at,
            "chosen": chosen,
            "scores": scores,
            "prefetch_counters": counters,
            "eval_counters": evals,
        })
        self.selection = Selection(chosen, phase_index, decided_at)
        self.phase_reset()

    def phase_reset(self) -> None:
        """Zero the sandbox: counters, scores, filters. Selection persists."""
        nl = self.components.get(NEXT_LINE)
        if nl is not None:
            nl.set_degree(self.scoreboard[NEXT_LINE][2])
        for name in self.names:
            self.scoreboard[name][0] = 0
            self.scoreboard[name][1] = 0
            self.scoreboard[name][2] = 0
            self.filters[name].clear()
        self._paes_since_reset = 0

    def scores(self) -> dict[str, int]:
        return {n: self.scoreboard[n][2] for n in self.names}

    def describe(self) -> dict:
        cfg = self.config
        return {
            "kind": "arsenal",
            "selection_policy": cfg.selection_policy,
            "components": list(self.names),
            "filter_kind": cfg.filter_kind,
            "score_inc": cfg.score_inc,
            "score_dec": cfg.score_dec,
            "min_score": cfg.min_score,
            "next_line_min_score": cfg.next_line_min_score,
            "eval_cnt": cfg.eval_cnt,
            "tskid_selection_attempt": cfg.tskid_selection_attempt,
            "bf_fpp": cfg.bf_fpp,
            "bf_est_cap": cfg.bf_est_cap,
            "master_seed": cfg.master_seed,
        }
