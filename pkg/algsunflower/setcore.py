"""
Plain set systems: families of finite sets of nonnegative integer atoms, the
sunflower predicate, and size padding.

A family of size 0 or 1 is a sunflower with empty core; otherwise the core is
the common intersection of every pair of distinct members.
"""

import itertools
from collections.abc import Collection, Hashable, Iterable, Iterator, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, TypeVar

import numpy as np

from algsunflower.errors import FormatError, PreconditionViolation
from algsunflower.utils import read_json

H = TypeVar("H", bound=Hashable)


@dataclass(frozen=True)
class SetFamily:
    members: tuple[frozenset[int], ...]
    universe: int | None = None

    def __post_init__(self) -> None:
        members = tuple(frozenset(m) for m in self.members)
        object.__setattr__(self, "members", members)
        if len(set(members)) != len(members):
            raise PreconditionViolation("family members must be pairwise distinct")
        for member in members:
            for atom in member:
                if isinstance(atom, bool) or not isinstance(atom, int) or atom < 0:
                    raise PreconditionViolation(f"atom {atom!r} is not a nonnegative integer")
                if self.universe is not None and atom >= self.universe:
                    raise PreconditionViolation(
                        f"atom {atom} outside universe hint {self.universe}"
                    )

    @classmethod
    def of(cls, sets: Iterable[Iterable[int]], universe: int | None = None) -> "SetFamily":
        return cls(tuple(frozenset(s) for s in sets), universe)

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self) -> Iterator[frozenset[int]]:
        return iter(self.members)

    def __getitem__(self, index: int) -> frozenset[int]:
        return self.members[index]

    def atoms(self) -> frozenset[int]:
        return frozenset().union(*self.members)

    def max_size(self) -> int:
        return max((len(m) for m in self.members), default=0)

    def subfamily(self, indices: Iterable[int]) -> "SetFamily":
        return SetFamily(tuple(self.members[i] for i in indices), self.universe)


@dataclass(frozen=True)
class SunflowerWitness:
    core: frozenset[int]
    member_indices: frozenset[int]

    def verify(self, family: SetFamily) -> bool:
        if any(not 0 <= i < len(family) for i in self.member_indices):
            return False
        core = is_sunflower(family.subfamily(sorted(self.member_indices)))
        return core == self.core

    def to_json(self) -> dict[str, list[int]]:
        return {"core": sorted(self.core), "members": sorted(self.member_indices)}


@dataclass(frozen=True)
class PaddedFamily:
    family: SetFamily
    index_map: dict[int, int] = field(compare=False)


def is_sunflower(family: SetFamily | Sequence[Collection[H]]) -> frozenset | None:
    members = family.members if isinstance(family, SetFamily) else [frozenset(m) for m in family]
    if len(members) <= 1:
        return frozenset()
    core = frozenset.intersection(*members)
    # every pairwise intersection equals the core iff the petals are disjoint
    seen: set = set()
    for member in members:
        petal = member - core
        if not seen.isdisjoint(petal):
            return None
        seen |= petal
    return core


def subfamily_sunflowers(family: SetFamily, n: int) -> Iterator[SunflowerWitness]:
    for indices in itertools.combinations(range(len(family)), n):
        core = is_sunflower([family[i] for i in indices])
        if core is not None:
            yield SunflowerWitness(core, frozenset(indices))


def pad_family(family: SetFamily, k: int) -> PaddedFamily:
    if k < 1:
        raise PreconditionViolation(f"padding size must be positive, got {k}")
    oversized = [i for i, m in enumerate(family) if len(m) > k]
    if oversized:
        raise PreconditionViolation(
            f"member {oversized[0]} has {len(family[oversized[0]])} atoms, more than {k}"
        )
    fresh = max(family.universe or 0, max(family.atoms(), default=-1) + 1)
    padded = []
    for member in family:
        missing = k - len(member)
        padded.append(member | frozenset(range(fresh, fresh + missing)))
        fresh += missing
    result = SetFamily(tuple(padded), fresh if family.universe is not None else None)
    return PaddedFamily(result, {i: i for i in range(len(family))})


def family_from_json(payload: Any, *, path: str | None = None) -> SetFamily:
    if not isinstance(payload, dict) or not isinstance(payload.get("sets"), list):
        raise FormatError('expected an object with a "sets" array', path=path)
    universe = payload.get("universe")
    if universe is not None and (isinstance(universe, bool) or not isinstance(universe, int)):
        raise FormatError('"universe" must be an integer', path=path)
    sets = []
    for position, raw in enumerate(payload["sets"]):
        if not isinstance(raw, list) or not all(
            isinstance(a, int) and not isinstance(a, bool) and a >= 0 for a in raw
        ):
            raise FormatError(f"set #{position} is not a list of nonnegative integers", path=path)
        if len(set(raw)) != len(raw):
            raise FormatError(f"set #{position} repeats an atom", path=path)
        sets.append(frozenset(raw))
    try:
        return SetFamily(tuple(sets), universe)
    except PreconditionViolation as e:
        raise FormatError(str(e), path=path) from e


def family_to_json(family: SetFamily) -> dict[str, Any]:
    payload: dict[str, Any] = {"sets": [sorted(m) for m in family]}
    if family.universe is not None:
        payload["universe"] = family.universe
    return payload


def load_family(path: str | Path) -> SetFamily:
    return family_from_json(read_json(path), path=str(path))


def witness_from_json(payload: Any, *, path: str | None = None) -> SunflowerWitness:
    try:
        return SunflowerWitness(frozenset(payload["core"]), frozenset(payload["members"]))
    except (KeyError, TypeError) as e:
        raise FormatError(f"malformed witness: {e}", path=path) from e


def random_family(
    rng: np.random.Generator,
    count: int,
    max_size: int,
    universe: int,
    *,
    uniform: bool = False,
) -> SetFamily:
    """
    Draw `count` distinct sets over atoms 0..universe-1. With `uniform` every
    set has exactly `max_size` atoms, otherwise sizes are drawn from
    0..max_size.
    """
    sizes = [max_size] if uniform else range(max_size + 1)
    pool = [frozenset(c) for size in sizes for c in itertools.combinations(range(universe), size)]
    if count > len(pool):
        raise PreconditionViolation(
            f"only {len(pool)} distinct sets of size <= {max_size} over {universe} atoms"
        )
    picks = rng.choice(len(pool), size=count, replace=False)
    return SetFamily(tuple(pool[int(i)] for i in sorted(picks)), universe)
