"""
Finding sunflowers: the constructive Erdős–Rado recursion, an exact
branch-and-bound over a concrete pool of sets, and the exact value of
SF(n, k) by isomorph-free generation of sunflower-free families.
"""

import itertools
import logging
import math
import time
from collections import Counter
from collections.abc import Collection, Sequence
from dataclasses import dataclass, field
from typing import Any, Literal

from algsunflower.bounds import er_bound
from algsunflower.canon import Form, canonical_form
from algsunflower.errors import FormatError, PreconditionViolation, SunflowerError
from algsunflower.setcore import SetFamily, SunflowerWitness, is_sunflower, random_family
from algsunflower.utils import parallel_map, spawn_rngs

logger = logging.getLogger(__name__)

Status = Literal["exact", "bound"]


@dataclass(frozen=True)
class SearchBudget:
    max_universe: int = 24
    max_family: int = 64
    time_hint: float | None = None

    def __post_init__(self) -> None:
        if self.max_universe < 1 or self.max_family < 1:
            raise PreconditionViolation("search budget limits must be positive")
        if self.time_hint is not None and self.time_hint <= 0:
            raise PreconditionViolation("time hint must be positive")

    def covers(self, other: "SearchBudget") -> bool:
        return (
            self.max_universe >= other.max_universe
            and self.max_family >= other.max_family
            and (
                self.time_hint is None
                or (other.time_hint is not None and other.time_hint <= self.time_hint)
            )
        )


@dataclass(frozen=True)
class SfAnswer:
    n: int
    k: int
    value: int
    status: Status
    extremal: SetFamily | None
    level_sizes: tuple[int, ...] = field(default=(), compare=False)

    @property
    def exact(self) -> bool:
        return self.status == "exact"

    def to_json(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "k": self.k,
            "value": self.value,
            "extremal": [sorted(m) for m in self.extremal] if self.extremal is not None else None,
            "status": self.status,
        }

    @classmethod
    def from_json(cls, payload: Any, *, path: str | None = None) -> "SfAnswer":
        try:
            extremal = payload["extremal"]
            status = payload["status"]
            if status not in ("exact", "bound"):
                raise ValueError(f"unknown status {status!r}")
            return cls(
                n=int(payload["n"]),
                k=int(payload["k"]),
                value=int(payload["value"]),
                status=status,
                extremal=SetFamily.of(extremal) if extremal is not None else None,
            )
        except (KeyError, TypeError, ValueError) as e:
            raise FormatError(f"malformed certificate: {e}", path=path) from e


def _recurse(
    items: list[tuple[int, frozenset[int]]], n: int
) -> tuple[frozenset[int], list[int]] | None:
    if len(items) < n:
        return None
    if n <= 2:
        chosen = items[:n]
        core = frozenset.intersection(*(m for _, m in chosen)) if n == 2 else frozenset()
        return core, [i for i, _ in chosen]

    disjoint: list[int] = []
    covered: set[int] = set()
    for index, member in items:
        if covered.isdisjoint(member):
            disjoint.append(index)
            covered |= member
            if len(disjoint) == n:
                return frozenset(), disjoint

    # every member now meets the disjoint part; descend into the link of a
    # popular atom, most popular first
    counts = Counter(atom for _, member in items for atom in member)
    for atom, count in sorted(counts.items(), key=lambda ac: (-ac[1], ac[0])):
        if count < n:
            break
        link = [(index, member - {atom}) for index, member in items if atom in member]
        found = _recurse(link, n)
        if found is not None:
            core, indices = found
            return core | {atom}, indices
    return None


def greedy_sunflower(family: SetFamily, n: int, k: int) -> SunflowerWitness | None:
    if any(len(m) > k for m in family):
        raise PreconditionViolation(f"family has a member larger than k={k}")
    if n <= 0:
        return SunflowerWitness(frozenset(), frozenset())
    found = _recurse(list(enumerate(family)), n)
    if found is None:
        return None
    core, indices = found
    witness = SunflowerWitness(core, frozenset(indices))
    if not witness.verify(family):
        raise SunflowerError(f"greedy search produced an invalid witness {witness}")
    return witness


def _completes_sunflower(members: Sequence[frozenset[int]], new: frozenset[int], n: int) -> bool:
    return any(
        is_sunflower([*group, new]) is not None
        for group in itertools.combinations(members, n - 1)
    )


def max_sunflower_free(pool: Sequence[Collection[Any]], n: int) -> list[int]:
    """
    Indices of a largest sub-family of `pool` with no n-sunflower, by
    branch-and-bound over include/exclude decisions.
    """
    if n < 1:
        raise PreconditionViolation(f"sunflower size must be positive, got {n}")
    sets = [frozenset(m) for m in pool]
    best: list[int] = []

    def extend(position: int, chosen: list[int]) -> None:
        nonlocal best
        if len(chosen) > len(best):
            best = list(chosen)
        if position == len(sets) or len(chosen) + len(sets) - position <= len(best):
            return
        candidate = sets[position]
        if not _completes_sunflower([sets[i] for i in chosen], candidate, n):
            chosen.append(position)
            extend(position + 1, chosen)
            chosen.pop()
        extend(position + 1, chosen)

    extend(0, [])
    return best


def pool_sf(pool: Sequence[Collection[Any]], n: int) -> int:
    """
    Least l >= n such that every l-member sub-family of the pool has an
    n-sunflower. A pool too small to hold n members still gives n.
    """
    return max(len(max_sunflower_free(pool, n)) + 1, n)


def _extensions(
    form: Form, n: int, k: int, max_universe: int, uniform: bool
) -> tuple[dict[Form, None], bool]:
    members = [frozenset(m) for m in form]
    existing = set(members)
    used = sorted(frozenset().union(*members))
    width = len(used)
    found: dict[Form, None] = {}
    capped = False
    for size in range(k + 1):
        for old in itertools.combinations(used, size):
            for fresh in [k - size] if uniform else range(k - size + 1):
                if width + fresh > max_universe:
                    capped = True
                    break
                new = frozenset(old) | frozenset(range(width, width + fresh))
                if new in existing or _completes_sunflower(members, new, n):
                    continue
                found.setdefault(canonical_form([*members, new]), None)
    return found, capped


def exact_sf(
    n: int, k: int, budget: SearchBudget | None = None, *, threads: int = 1, uniform: bool = False
) -> SfAnswer:
    """
    SF(n, k) over families of distinct sets of size at most k, or of size
    exactly k with `uniform`. Level j holds one canonical representative per
    isomorphism class of n-sunflower-free families with j members; every
    such family arises from a level j-1 representative plus one set, so the
    first empty level j gives SF = j.

    Fewer than n members never hold an n-sunflower, so the value is at least
    n even when too few sets exist to build such families (k = 0).
    """
    if n < 1 or k < 0:
        raise PreconditionViolation(f"exact_sf needs n >= 1 and k >= 0, got ({n}, {k})")
    budget = budget or SearchBudget()
    deadline = time.monotonic() + budget.time_hint if budget.time_hint else None
    level: list[Form] = [()]
    sizes = [1]
    truncated = False
    while True:
        size = len(sizes)
        if size > budget.max_family or (deadline is not None and time.monotonic() > deadline):
            truncated = True
            break
        results = parallel_map(
            lambda form: _extensions(form, n, k, budget.max_universe, uniform), level, threads=threads
        )
        merged: dict[Form, None] = {}
        for found, capped in results:
            merged.update(found)
            truncated = truncated or capped
        logger.info("SF(%d, %d): %d sunflower-free classes with %d members", n, k, len(merged), size)
        if not merged:
            break
        level = sorted(merged)
        sizes.append(len(level))

    extremal = SetFamily.of(level[0])
    status: Status = "bound" if truncated else "exact"
    value = max(len(sizes), n)
    if truncated:
        logger.warning("SF(%d, %d) search hit its budget; %d is a lower bound", n, k, value)
    return SfAnswer(n, k, value, status, extremal, tuple(sizes))


@dataclass(frozen=True)
class EmpiricalReport:
    n: int
    k: int
    size: int
    count: int
    found: int
    failures: tuple[SetFamily, ...]

    @property
    def ok(self) -> bool:
        return not self.failures


def sample_universe(size: int, k: int) -> int:
    universe = max(2 * k, 1)
    while math.comb(universe, k) < 2 * size:
        universe += 1
    return universe


def empirical_sf_check(n: int, k: int, count: int, seed: int, *, threads: int = 1) -> EmpiricalReport:
    """
    Draw `count` distinct k-uniform families with exactly k!(n-1)^k members
    and confirm the greedy finder returns a verified n-sunflower in each.
    """
    size = er_bound(n, k)
    universe = sample_universe(size, k)
    families = [random_family(rng, size, k, universe, uniform=True) for rng in spawn_rngs(seed, count)]
    witnesses = parallel_map(lambda family: greedy_sunflower(family, n, k), families, threads=threads)
    failures = tuple(f for f, w in zip(families, witnesses) if w is None or len(w.member_indices) != n)
    for family in failures:
        logger.error("no %d-sunflower found in %s", n, [sorted(m) for m in family])
    return EmpiricalReport(n, k, size, count, count - len(failures), failures)
