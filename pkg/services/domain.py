"""
Enumeration domains - the finite adversary universes every sweep runs over.

Adversaries are ordered pattern-major: every failure pattern (faulty-set size, faulty set,
per-process crash round and recipients) followed by every input vector, so a sweep can build
one communication graph per pattern and relabel it for each input vector.
"""
import itertools
import logging
import random
from dataclasses import dataclass
from math import comb
from typing import Iterator, List, Optional, Sequence, Tuple

from config.settings import config
from core.errors import DomainTooLarge, HorizonTooShort
from core.model import Adversary, Crash, FailurePattern

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EnumerationDomain:
    n: int
    t: int
    value_count: int = 2
    horizon: Optional[int] = None
    guard: bool = True

    def __post_init__(self):
        if self.horizon is None:
            object.__setattr__(self, "horizon", self.t + 1)
        if self.n < 2 or not 0 <= self.t <= self.n - 1:
            raise DomainTooLarge(f"need n >= 2 and 0 <= t <= n-1, got n={self.n}, t={self.t}")
        if self.value_count < 1:
            raise DomainTooLarge(f"value set must be nonempty, got {self.value_count}")
        if self.horizon < self.t + 1:
            raise HorizonTooShort(f"horizon {self.horizon} is below t+1={self.t + 1}")
        if self.guard and (self.n > config.ENUM_MAX_N or self.horizon > config.ENUM_MAX_HORIZON):
            raise DomainTooLarge(
                f"n={self.n}, horizon={self.horizon} exceed the enumeration guard "
                f"(n <= {config.ENUM_MAX_N}, horizon <= {config.ENUM_MAX_HORIZON})"
            )

    @property
    def value_vectors(self) -> int:
        return self.value_count ** self.n

    def describe(self) -> dict:
        return {"n": self.n, "t": self.t, "values": self.value_count, "horizon": self.horizon}


def crash_options(dom: EnumerationDomain, process: int) -> List[Crash]:
    """Every crash of one process: rounds 1..horizon+1 times every recipient subset"""
    others = [j for j in range(1, dom.n + 1) if j != process]
    options = []
    for rnd in range(1, dom.horizon + 2):
        for bits in range(1 << len(others)):
            delivers = frozenset(j for b, j in enumerate(others) if bits >> b & 1)
            options.append(Crash(process, rnd, delivers))
    return options


def count_patterns(dom: EnumerationDomain) -> int:
    per_process = (dom.horizon + 1) * (1 << (dom.n - 1))
    return sum(comb(dom.n, s) * per_process ** s for s in range(dom.t + 1))


def count_adversaries(dom: EnumerationDomain) -> int:
    return dom.value_vectors * count_patterns(dom)


def iter_patterns(dom: EnumerationDomain) -> Iterator[FailurePattern]:
    options = {j: crash_options(dom, j) for j in range(1, dom.n + 1)}
    for size in range(dom.t + 1):
        for faulty in itertools.combinations(range(1, dom.n + 1), size):
            for choice in itertools.product(*(options[j] for j in faulty)):
                yield FailurePattern(choice, dom.t)


def iter_value_vectors(dom: EnumerationDomain) -> Iterator[Tuple[int, ...]]:
    return itertools.product(range(dom.value_count), repeat=dom.n)


def enumerate_adversaries(dom: EnumerationDomain, start: int = 0, stop: Optional[int] = None) -> Iterator[Adversary]:
    """All adversaries of the domain in canonical order; start/stop slice by pattern index"""
    for pattern in itertools.islice(iter_patterns(dom), start, stop):
        for values in iter_value_vectors(dom):
            yield Adversary(dom.n, values, pattern)


def pattern_groups(dom: EnumerationDomain, start: int = 0, stop: Optional[int] = None) -> Iterator[List[Adversary]]:
    """Same order as enumerate_adversaries, grouped by failure pattern"""
    for pattern in itertools.islice(iter_patterns(dom), start, stop):
        yield [Adversary(dom.n, values, pattern) for values in iter_value_vectors(dom)]


def sample_adversaries(n: int, t: int, value_count: int, horizon: int, count: int, seed: int = 0) -> List[Adversary]:
    """Seeded random adversaries (no size guard); crash rounds 1..horizon+1, recipients uniform"""
    rng = random.Random(seed)
    result = []
    for _ in range(count):
        f = rng.randint(0, t)
        crashes = []
        for process in sorted(rng.sample(range(1, n + 1), f)):
            delivers = frozenset(j for j in range(1, n + 1) if j != process and rng.random() < 0.5)
            crashes.append(Crash(process, rng.randint(1, horizon + 1), delivers))
        values: Sequence[int] = tuple(rng.randrange(value_count) for _ in range(n))
        result.append(Adversary(n, values, FailurePattern(tuple(crashes), t)))
    return result
