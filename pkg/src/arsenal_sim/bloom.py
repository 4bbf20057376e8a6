"""Bloom filters for shadow-prefetch membership tracking.

Each component prefetcher owns one filter; candidate line addresses go in,
demanded line addresses are queried against it. Sizing follows the standard
optimal formulas from a projected capacity and a target false-positive
probability. An exact-set variant and a paired (bloom + exact) variant exist
so scoring can be cross-checked against ground truth.
"""

import math
from dataclasses import dataclass

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _mix64(x: int) -> int:
    # splitmix64 finalizer: cheap, well-distributed, platform-independent
    x &= _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def component_seed(master_seed: int, component_index: int) -> int:
    """Derive a per-component filter seed from a master seed and an index."""
    return _mix64((master_seed & _MASK64) + (component_index + 1) * _GOLDEN)


def derive_parameters(n: int, p: float) -> tuple[int, int]:
    """Optimal bit-table size m and hash count k for n entries at rate p.

    m = ceil(n * ln(1/p) / (ln 2)^2), k = max(1, round((m/n) * ln 2)).
    """
    if n < 1:
        raise ValueError("projected capacity must be at least 1")
    if not (0.0 < p < 1.0):
        raise ValueError("false-positive probability must be in (0, 1)")
    m = math.ceil(n * math.log(1.0 / p) / (math.log(2.0) ** 2))
    k = max(1, int(round((m / n) * math.log(2.0))))
    return m, k


@dataclass(frozen=True)
class BloomParams:
    projected_capacity: int
    target_fpp: float
    bit_table_size: int
    hash_count: int
    seed: int

    @classmethod
    def create(cls, n: int, p: float, seed: int = 0) -> "BloomParams":
        m, k = derive_parameters(n, p)
        return cls(n, p, m, k, seed & _MASK64)

    @property
    def bit_table_bytes(self) -> int:
        return (self.bit_table_size + 7) // 8


class BloomFilter:
    """Approximate membership set over line addresses, double hashing.

    Bit i of element x is (h1(x) + i*h2(x)) mod m for two seeded 64-bit
    hashes. No false negatives; false positives at roughly the target rate
    once the filter holds its projected capacity.
    """

    __slots__ = ("params", "bits", "inserted_count",
                 "_m", "_k", "_seed_a", "_seed_b", "_pos_cache")

    _POS_CACHE_LIMIT = 1 << 17

    def __init__(self, capacity: int = 2000, fpp: float = 0.01, seed: int = 0,
                 params: BloomParams | None = None):
        if params is None:
            params = BloomParams.create(capacity, fpp, seed)
        self.params = params
        self._m = params.bit_table_size
        self._k = params.hash_count
        self._seed_a = params.seed
        self._seed_b = _mix64(params.seed ^ _GOLDEN)
        self.bits = bytearray(params.bit_table_bytes)
        self.inserted_count = 0
        # positions are a pure function of (element, params); memoized because
        # shadow streams re-insert the same sliding window of lines constantly
        self._pos_cache: dict[int, list[int]] = {}

    def _positions(self, element: int) -> list[int]:
        pos = self._pos_cache.get(element)
        if pos is None:
            h1 = _mix64(element ^ self._seed_a)
            h2 = _mix64(element ^ self._seed_b) | 1
            m = self._m
            pos = [(h1 + i * h2) % m for i in range(self._k)]
            if len(self._pos_cache) >= self._POS_CACHE_LIMIT:
                self._pos_cache.clear()
            self._pos_cache[element] = pos
        return pos

    def insert(self, element: int) -> None:
        bits = self.bits
        for p in self._positions(element):
            bits[p >> 3] |= 1 << (p & 7)
        self.inserted_count += 1

    def query(self, element: int) -> bool:
        bits = self.bits
        for p in self._positions(element):
            if not bits[p >> 3] & (1 << (p & 7)):
                return False
        return True

    def clear(self) -> None:
        """Reset to the freshly-constructed state (same params and seed)."""
        self.bits = bytearray(len(self.bits))
        self.inserted_count = 0


class ExactFilter:
    """Drop-in exact-set replacement for BloomFilter (ground truth)."""

    __slots__ = ("members", "inserted_count")

    def __init__(self):
        self.members: set[int] = set()
        self.inserted_count = 0

    def insert(self, element: int) -> None:
        self.members.add(element)
        self.inserted_count += 1

    def query(self, element: int) -> bool:
        return element in self.members

    def clear(self) -> None:
        self.members.clear()
        self.inserted_count = 0


class PairedFilter:
    """Bloom filter answering queries, with an exact set riding along.

    Queries return the bloom answer (so behaviour matches a bloom-only run
    bit for bit) while the exact set flags false-positive probes, which is
    what bounds any score inflation.
    """

    __slots__ = ("bloom", "exact", "false_positive_probes", "last_query_was_fp")

    def __init__(self, capacity: int = 2000, fpp: float = 0.01, seed: int = 0):
        self.bloom = BloomFilter(capacity, fpp, seed)
        self.exact = ExactFilter()
        self.false_positive_probes = 0
        self.last_query_was_fp = False

    @property
    def inserted_count(self) -> int:
        return self.bloom.inserted_count

    def insert(self, element: int) -> None:
        self.bloom.insert(element)
        self.exact.insert(element)

    def query(self, element: int) -> bool:
        answer = self.bloom.query(element)
        self.last_query_was_fp = answer and not self.exact.query(element)
        if self.last_query_was_fp:
            self.false_positive_probes += 1
        return answer

    def clear(self) -> None:
        self.bloom.clear()
        self.exact.clear()


def make_filter(kind: str, capacity: int, fpp: float, seed: int):
    """Build a shadow filter: 'bloom', 'exact', or 'paired'."""
    if kind == "bloom":
        return BloomFilter(capacity, fpp, seed)
    if kind == "exact":
        return ExactFilter()
    if kind == "paired":
        return PairedFilter(capacity, fpp, seed)
    raise ValueError(f"unknown filter kind: {kind!r}")
