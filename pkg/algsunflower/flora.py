"""
The two structures whose substructures behave like plain sets.

M_k is a disjoint union of f-cycles of length k; its size-k substructures
are exactly the cycles, so any family of them is a sunflower with empty core.

N_beta has unary s, c, p0, p1 and binary a. An element is a non-repeating
tuple of base atoms together with a position on an s-cycle of length
beta(len(tuple)); the element at position 0 is the distinguished one, fixed
by c. On distinguished elements p0 projects to the first entry, p1 drops
the first entry, and a(x, y) prepends the single entry of x to y when it is
not already there. A substructure is determined by its base (the atoms it
mentions), which turns sunflower questions about substructures into the same
questions about plain sets of atoms.
"""

import functools
import itertools
import logging
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any

from algsunflower.algcore import FinStructure, GenSub, Signature, substructures_up_to
from algsunflower.bounds import BetaFn, gamma, gamma_floor
from algsunflower.errors import (
    FormatError,
    HorizonExceeded,
    NoGenerator,
    PreconditionViolation,
    SizeCapExceeded,
    SunflowerError,
)
from algsunflower.setcore import SetFamily, is_sunflower, pad_family
from algsunflower.sfsearch import SearchBudget, SfAnswer, exact_sf, pool_sf

logger = logging.getLogger(__name__)

MK_SIGNATURE = Signature.of(f=1)
NBETA_SIGNATURE = Signature.of(s=1, c=1, p0=1, p1=1, a=2)
MATERIALIZE_CAP = 1500


@dataclass(frozen=True)
class MkFragmentSpec:
    k: int
    copies: int

    def __post_init__(self) -> None:
        if self.k < 1 or self.copies < 1:
            raise PreconditionViolation(f"M_k fragment needs k >= 1 and copies >= 1, got {self}")


def build_mk_fragment(spec: MkFragmentSpec) -> FinStructure:
    k = spec.k
    f = [block * k + (j + 1) % k for block in range(spec.copies) for j in range(k)]
    return FinStructure(MK_SIGNATURE, k * spec.copies, {"f": f})


@dataclass(frozen=True, order=True)
class NBetaElement:
    entries: tuple[int, ...]
    rot: int = 0

    def __post_init__(self) -> None:
        entries = tuple(self.entries)
        object.__setattr__(self, "entries", entries)
        if not entries:
            raise PreconditionViolation("an element needs at least one tuple entry")
        if len(set(entries)) != len(entries):
            raise PreconditionViolation(f"tuple {entries} repeats an atom")
        if any(a < 0 for a in entries) or self.rot < 0:
            raise PreconditionViolation(f"negative atom or rotation in {entries}, {self.rot}")

    @property
    def length(self) -> int:
        return len(self.entries)

    @property
    def distinguished(self) -> bool:
        return self.rot == 0

    def to_json(self) -> dict[str, Any]:
        return {"tuple": list(self.entries), "rot": self.rot}

    @classmethod
    def from_json(cls, payload: Any) -> "NBetaElement":
        try:
            return cls(tuple(int(a) for a in payload["tuple"]), int(payload["rot"]))
        except (KeyError, TypeError, ValueError) as e:
            raise FormatError(f"malformed element: {e}") from e


def _check_element(beta: BetaFn, x: NBetaElement) -> None:
    if x.length > beta.horizon:
        raise HorizonExceeded(f"{x} is longer than horizon {beta.horizon}")
    if x.rot >= beta(x.length):
        raise PreconditionViolation(f"{x} has rotation beyond beta({x.length}) = {beta(x.length)}")


def nbeta_apply(beta: BetaFn, sym: str, *args: NBetaElement) -> NBetaElement:
    arity = 2 if sym == "a" else 1
    if sym not in ("s", "c", "p0", "p1", "a") or len(args) != arity:
        raise PreconditionViolation(f"cannot apply {sym} to {len(args)} arguments")
    for x in args:
        _check_element(beta, x)
    x = args[0]
    if sym == "s":
        return NBetaElement(x.entries, (x.rot + 1) % beta(x.length))
    if sym == "c":
        return NBetaElement(x.entries, 0)
    if sym in ("p0", "p1"):
        if not x.distinguished or x.length == 1:
            return x
        return NBetaElement(x.entries[:1] if sym == "p0" else x.entries[1:], 0)

    y = args[1]
    if not (x.distinguished and y.distinguished) or x.length != 1 or x.entries[0] in y.entries:
        return x
    if y.length + 1 > beta.horizon:
        raise HorizonExceeded(f"a({x}, {y}) needs tuples longer than horizon {beta.horizon}")
    return NBetaElement(x.entries + y.entries, 0)


@dataclass(frozen=True)
class NBetaSub:
    beta: BetaFn
    base: frozenset[int]

    def __post_init__(self) -> None:
        base = frozenset(self.base)
        object.__setattr__(self, "base", base)
        if any(a < 0 for a in base):
            raise PreconditionViolation(f"negative atom in base {sorted(base)}")
        if len(base) > self.beta.horizon:
            raise HorizonExceeded(f"base of {len(base)} atoms exceeds horizon {self.beta.horizon}")

    def carrier(self) -> tuple[NBetaElement, ...]:
        atoms = sorted(self.base)
        return tuple(
            NBetaElement(entries, rot)
            for m in range(1, len(atoms) + 1)
            for entries in itertools.permutations(atoms, m)
            for rot in range(self.beta(m))
        )

    @cached_property
    def elements(self) -> frozenset[NBetaElement]:
        return frozenset(self.carrier())

    def __len__(self) -> int:
        return gamma(self.beta, len(self.base))

    def __contains__(self, x: object) -> bool:
        return (
            isinstance(x, NBetaElement)
            and x.length <= self.beta.horizon
            and self.base.issuperset(x.entries)
            and x.rot < self.beta(x.length)
        )

    def to_json(self) -> dict[str, Any]:
        return {"beta": self.beta.to_json(), "base": sorted(self.base)}

    @classmethod
    def from_json(cls, payload: Any, *, path: str | None = None) -> "NBetaSub":
        try:
            return cls(BetaFn(tuple(int(b) for b in payload["beta"])), frozenset(int(a) for a in payload["base"]))
        except (KeyError, TypeError, ValueError) as e:
            raise FormatError(f"malformed substructure: {e}", path=path) from e


def sub_from_base(beta: BetaFn, base: Iterable[int]) -> NBetaSub:
    return NBetaSub(beta, frozenset(base))


def b_map(beta: BetaFn, elements: Iterable[NBetaElement]) -> frozenset[int]:
    """Atoms of the elements fixed by both c and p0."""
    return frozenset(
        x.entries[0]
        for x in elements
        if nbeta_apply(beta, "c", x) == x and nbeta_apply(beta, "p0", x) == x
    )


def base_of(A: NBetaSub) -> frozenset[int]:
    return b_map(A.beta, A.carrier())


def nbeta_size(beta: BetaFn, m: int) -> int:
    return gamma(beta, m)


def raw_closure(beta: BetaFn, seeds: Iterable[NBetaElement]) -> frozenset[NBetaElement]:
    carrier: set[NBetaElement] = set()
    pending = list(seeds)
    while pending:
        x = pending.pop()
        if x in carrier:
            continue
        carrier.add(x)
        images = [nbeta_apply(beta, sym, x) for sym in ("s", "c", "p0", "p1")]
        for y in carrier:
            images.append(nbeta_apply(beta, "a", x, y))
            images.append(nbeta_apply(beta, "a", y, x))
        pending.extend(i for i in images if i not in carrier)
    return frozenset(carrier)


def nbeta_closure(beta: BetaFn, seeds: Iterable[NBetaElement], *, cross_check: bool = False) -> NBetaSub:
    seeds = list(seeds)
    for x in seeds:
        _check_element(beta, x)
    base = frozenset(a for x in seeds for a in x.entries)
    sub = NBetaSub(beta, base)
    if cross_check and raw_closure(beta, seeds) != sub.elements:
        raise SunflowerError(f"closure of {seeds} disagrees with the substructure on base {sorted(base)}")
    return sub


def _common_beta(X: Sequence[NBetaSub]) -> BetaFn | None:
    betas = {A.beta for A in X}
    if len(betas) > 1:
        raise PreconditionViolation("substructures come from different beta")
    return next(iter(betas), None)


def transfer_sunflower(X: Sequence[NBetaSub]) -> tuple[bool, NBetaSub | None]:
    beta = _common_beta(X)
    core = is_sunflower([A.base for A in X])
    if core is None:
        return False, None
    return True, NBetaSub(beta, core) if beta is not None else None


def carrier_sunflower(X: Sequence[NBetaSub]) -> frozenset[NBetaElement] | None:
    return is_sunflower([A.elements for A in X])


def extend_base_bijection(
    A: NBetaSub, B: NBetaSub, mapping: Mapping[int, int]
) -> dict[NBetaElement, NBetaElement]:
    if set(mapping) != A.base or set(mapping.values()) != B.base or len(B.base) != len(A.base):
        raise PreconditionViolation(f"{dict(mapping)} is not a bijection between the bases")
    return {x: NBetaElement(tuple(mapping[a] for a in x.entries), x.rot) for x in A.carrier()}


def is_symbolic_isomorphism(A: NBetaSub, B: NBetaSub, mapping: Mapping[NBetaElement, NBetaElement]) -> bool:
    beta = _common_beta([A, B])
    if set(mapping) != A.elements or set(mapping.values()) != B.elements:
        return False
    for x in A.elements:
        for sym in ("s", "c", "p0", "p1"):
            if mapping[nbeta_apply(beta, sym, x)] != nbeta_apply(beta, sym, mapping[x]):
                return False
        for y in A.elements:
            if mapping[nbeta_apply(beta, "a", x, y)] != nbeta_apply(beta, "a", mapping[x], mapping[y]):
                return False
    return True


@dataclass(frozen=True)
class IsoWitness:
    source: int
    target: int
    mapping: dict[NBetaElement, NBetaElement] = field(compare=False, repr=False)


def strong_uniformize(X: Sequence[NBetaSub]) -> list[IsoWitness]:
    """
    For every pair i <= j an isomorphism X[i] -> X[j] that is the identity on
    the intersection, extended from a base bijection fixing common atoms.
    """
    _common_beta(X)
    if len({len(A.base) for A in X}) > 1:
        raise PreconditionViolation("family is not uniform")
    if not transfer_sunflower(X)[0]:
        raise PreconditionViolation("family is not a sunflower")
    witnesses = []
    for i, A in enumerate(X):
        for j in range(i, len(X)):
            B = X[j]
            common = A.base & B.base
            mapping = {a: a for a in common}
            mapping.update(zip(sorted(A.base - common), sorted(B.base - common)))
            witnesses.append(IsoWitness(i, j, extend_base_bijection(A, B, mapping)))
    return witnesses


def nbeta_pad(X: Sequence[NBetaSub]) -> tuple[list[NBetaSub], dict[int, int]]:
    """
    Grow every base with fresh atoms to the largest base size in X. The
    results are pairwise isomorphic, contain their originals, and a
    sub-family is a sunflower exactly when its image is.
    """
    beta = _common_beta(X)
    target = max((len(A.base) for A in X), default=0)
    if beta is None or target == 0:
        return list(X), {i: i for i in range(len(X))}
    padded = pad_family(SetFamily.of(A.base for A in X), target)
    return [NBetaSub(beta, base) for base in padded.family], padded.index_map


@dataclass(frozen=True)
class Embedding:
    source: NBetaSub
    target: NBetaSub
    base_map: dict[int, int] = field(compare=False)

    def __post_init__(self) -> None:
        if set(self.base_map) != self.source.base:
            raise PreconditionViolation("embedding must be defined on the whole source base")
        if len(set(self.base_map.values())) != len(self.base_map):
            raise PreconditionViolation("embedding is not injective")
        if not self.target.base.issuperset(self.base_map.values()):
            raise PreconditionViolation("embedding leaves the target base")

    def apply(self, x: NBetaElement) -> NBetaElement:
        return NBetaElement(tuple(self.base_map[a] for a in x.entries), x.rot)

    def image(self) -> frozenset[NBetaElement]:
        return frozenset(self.apply(x) for x in self.source.carrier())


def sap_amalgamate(beta: BetaFn, A: NBetaSub, into_B: Embedding, into_C: Embedding) -> tuple[Embedding, Embedding]:
    if into_B.source != A or into_C.source != A:
        raise PreconditionViolation("both embeddings must start at A")
    B, C = into_B.target, into_C.target
    back = {into_C.base_map[a]: into_B.base_map[a] for a in A.base}
    fresh = max(A.base | B.base | C.base, default=-1) + 1
    glue: dict[int, int] = {}
    for atom in sorted(C.base):
        if atom in back:
            glue[atom] = back[atom]
        else:
            glue[atom] = fresh
            fresh += 1
    amalgam = NBetaSub(beta, B.base | frozenset(glue.values()))
    return Embedding(B, amalgam, {b: b for b in B.base}), Embedding(C, amalgam, glue)


def single_generator(A: NBetaSub) -> NBetaElement:
    if not A.base:
        raise NoGenerator("the empty substructure is generated by the empty set")
    return NBetaElement(tuple(sorted(A.base)), 0)


@dataclass(frozen=True, eq=False)
class Materialized:
    beta: BetaFn
    base: frozenset[int]
    structure: FinStructure
    elements: tuple[NBetaElement, ...]
    index: dict[NBetaElement, int] = field(repr=False)

    def ids(self, elements: Iterable[NBetaElement]) -> frozenset[int]:
        return frozenset(self.index[x] for x in elements)

    def sub(self, base: Iterable[int]) -> GenSub:
        return GenSub(self.ids(sub_from_base(self.beta, base).carrier()), self.structure)


@functools.cache
def _materialize(beta: BetaFn, base: frozenset[int], cap: int) -> Materialized:
    sub = NBetaSub(beta, base)
    if len(sub) > cap:
        raise SizeCapExceeded(f"substructure on {sorted(base)} has {len(sub)} elements, cap is {cap}")
    elements = sub.carrier()
    index = {x: i for i, x in enumerate(elements)}
    tables: dict[str, Any] = {
        sym: [index[nbeta_apply(beta, sym, x)] for x in elements] for sym in ("s", "c", "p0", "p1")
    }
    tables["a"] = [[index[nbeta_apply(beta, "a", x, y)] for y in elements] for x in elements]
    logger.debug("materialized base %s: %d elements", sorted(base), len(elements))
    return Materialized(beta, base, FinStructure(NBETA_SIGNATURE, len(elements), tables), elements, index)


def materialize(beta: BetaFn, base: Iterable[int], cap: int = MATERIALIZE_CAP) -> Materialized:
    return _materialize(beta, frozenset(base), cap)


def nbeta_empirical_sf(
    beta: BetaFn, n: int, k: int, budget: SearchBudget | None = None, *, threads: int = 1
) -> SfAnswer:
    """
    SF over N_beta substructures of size <= k. Those are the substructures
    whose base has at most gamma_floor(beta, k) atoms, and sunflowers among
    them are sunflowers among their bases.
    """
    return exact_sf(n, gamma_floor(beta, k), budget, threads=threads)


@dataclass(frozen=True)
class MkCheck:
    k: int
    copies: int
    n: int
    families: int
    failures: tuple[tuple[frozenset[int], ...], ...]
    empirical_sf: int

    @property
    def ok(self) -> bool:
        return not self.failures and self.empirical_sf == self.n


def mk_substructure_family(k: int, copies: int) -> list[GenSub]:
    """Every substructure of size at most k in a fragment of M_k."""
    return list(substructures_up_to(build_mk_fragment(MkFragmentSpec(k, copies)), k).subs)


def mk_sunflower_check(k: int, copies: int, n: int) -> MkCheck:
    """
    Every family of n distinct size-k substructures of M_k must be a
    sunflower with empty core, and the least size forcing an n-sunflower
    among substructures of size <= k must be n.
    """
    subs = mk_substructure_family(k, copies)
    full = [s.carrier for s in subs if len(s) == k]
    failures = []
    families = 0
    for group in itertools.combinations(full, n):
        families += 1
        if is_sunflower(group) != frozenset():
            failures.append(group)
    return MkCheck(k, copies, n, families, tuple(failures), pool_sf([s.carrier for s in subs], n))


def nested_chain(beta: BetaFn, length: int) -> list[NBetaSub]:
    return [NBetaSub(beta, frozenset(range(m))) for m in range(1, length + 1)]


def chain_has_sunflower(chain: Sequence[NBetaSub], n: int) -> bool:
    return any(
        carrier_sunflower(group) is not None for group in itertools.combinations(chain, n)
    )
