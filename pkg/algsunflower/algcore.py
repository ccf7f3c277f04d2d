"""
Finite algebraic structures given by explicit function tables, their
generated substructures, and isomorphisms between substructures.

Only unary and binary function symbols exist, so there are no constants
and the empty set is always a substructure.
"""

import logging
from collections.abc import Iterator, Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from algsunflower.errors import FormatError, PreconditionViolation
from algsunflower.utils import read_json

logger = logging.getLogger(__name__)

Table = tuple[int, ...] | tuple[tuple[int, ...], ...]


@dataclass(frozen=True)
class Symbol:
    name: str
    arity: int

    def __post_init__(self) -> None:
        if not self.name:
            raise PreconditionViolation("symbol names must be nonempty")
        if self.arity not in (1, 2):
            raise PreconditionViolation(f"symbol {self.name} has arity {self.arity}, expected 1 or 2")


@dataclass(frozen=True)
class Signature:
    symbols: tuple[Symbol, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "symbols", tuple(self.symbols))
        names = [s.name for s in self.symbols]
        if len(set(names)) != len(names):
            raise PreconditionViolation(f"duplicate symbol names in {names}")

    @classmethod
    def of(cls, **arities: int) -> "Signature":
        return cls(tuple(Symbol(name, arity) for name, arity in arities.items()))

    @property
    def unary(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.symbols if s.arity == 1)

    @property
    def binary(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.symbols if s.arity == 2)


@dataclass(frozen=True, eq=False)
class FinStructure:
    signature: Signature
    size: int
    tables: Mapping[str, Table]

    def __post_init__(self) -> None:
        if self.size < 0:
            raise PreconditionViolation(f"structure size must be nonnegative, got {self.size}")
        tables: dict[str, Table] = {}
        for symbol in self.signature.symbols:
            if symbol.name not in self.tables:
                raise PreconditionViolation(f"no table for symbol {symbol.name}")
            raw = self.tables[symbol.name]
            if symbol.arity == 1:
                table: Table = tuple(int(v) for v in raw)
                values = list(table)
            else:
                table = tuple(tuple(int(v) for v in row) for row in raw)
                if any(len(row) != self.size for row in table):
                    raise PreconditionViolation(f"table {symbol.name} is not {self.size}x{self.size}")
                values = [v for row in table for v in row]
            if len(table) != self.size:
                raise PreconditionViolation(f"table {symbol.name} has {len(table)} rows, expected {self.size}")
            if any(not 0 <= v < self.size for v in values):
                raise PreconditionViolation(f"table {symbol.name} has values out of range")
            tables[symbol.name] = table
        object.__setattr__(self, "tables", tables)

    def apply(self, name: str, *args: int) -> int:
        value: Any = self.tables[name]
        for arg in args:
            value = value[arg]
        return value

    def whole(self) -> "GenSub":
        return GenSub(frozenset(range(self.size)), self)


@dataclass(frozen=True)
class GenSub:
    carrier: frozenset[int]
    parent: FinStructure = field(compare=False, repr=False)

    def __post_init__(self) -> None:
        carrier = frozenset(self.carrier)
        object.__setattr__(self, "carrier", carrier)
        if any(not 0 <= x < self.parent.size for x in carrier):
            raise PreconditionViolation("carrier leaves the parent universe")
        if _close(self.parent, carrier) != carrier:
            raise PreconditionViolation("carrier is not closed under the parent's functions")

    def __len__(self) -> int:
        return len(self.carrier)

    def __contains__(self, x: object) -> bool:
        return x in self.carrier


@dataclass(frozen=True)
class SubstructureListing:
    subs: tuple[GenSub, ...]
    truncated: bool = False


def _close(M: FinStructure, seed: Sequence[int] | frozenset[int]) -> frozenset[int]:
    unary = [M.tables[name] for name in M.signature.unary]
    binary = [M.tables[name] for name in M.signature.binary]
    carrier: set[int] = set()
    pending = list(seed)
    while pending:
        x = pending.pop()
        if x in carrier:
            continue
        carrier.add(x)
        images = [table[x] for table in unary]
        for table in binary:
            for y in carrier:
                images.append(table[x][y])
                images.append(table[y][x])
        pending.extend(i for i in images if i not in carrier)
    return frozenset(carrier)


def closure(M: FinStructure, seed: Sequence[int] | frozenset[int]) -> GenSub:
    if any(not 0 <= x < M.size for x in seed):
        raise PreconditionViolation(f"seed {sorted(seed)} leaves the universe 0..{M.size - 1}")
    return GenSub(_close(M, seed), M)


def substructures_up_to(M: FinStructure, k: int, cap: int = 10_000) -> SubstructureListing:
    """
    Every closed carrier of size <= k. A closed set D is reached from the
    empty set by repeatedly closing the current carrier plus one element of D.
    """
    if k < 0:
        return SubstructureListing(())
    found: dict[frozenset[int], GenSub] = {frozenset(): closure(M, ())}
    frontier = [frozenset()]
    truncated = False
    while frontier and not truncated:
        following = []
        for carrier in frontier:
            if len(carrier) >= k:
                continue
            for x in range(M.size):
                if x in carrier:
                    continue
                sub = closure(M, carrier | {x})
                if len(sub) > k or sub.carrier in found:
                    continue
                if len(found) >= cap:
                    logger.warning("substructure enumeration truncated at %d carriers", cap)
                    truncated = True
                    break
                found[sub.carrier] = sub
                following.append(sub.carrier)
            if truncated:
                break
        frontier = following
    subs = sorted(found.values(), key=lambda s: (len(s), sorted(s.carrier)))
    return SubstructureListing(tuple(subs), truncated)


def _check_compatible(A: GenSub, B: GenSub) -> None:
    if A.parent.signature != B.parent.signature:
        raise PreconditionViolation("substructures are over different signatures")


def _generators(A: GenSub, weight: Mapping[int, int]) -> list[int]:
    gens: list[int] = []
    covered: frozenset[int] = frozenset()
    for x in sorted(A.carrier, key=lambda x: (-weight[x], x)):
        if x not in covered:
            gens.append(x)
            covered = _close(A.parent, gens)
        if len(covered) == len(A):
            break
    return gens


class _PartialMap:
    def __init__(self, A: GenSub, B: GenSub, weight_a: Mapping[int, int], weight_b: Mapping[int, int]) -> None:
        self.A, self.B = A, B
        self.weight_a, self.weight_b = weight_a, weight_b
        self.forward: dict[int, int] = {}
        self.backward: dict[int, int] = {}

    def copy(self) -> "_PartialMap":
        other = _PartialMap(self.A, self.B, self.weight_a, self.weight_b)
        other.forward = dict(self.forward)
        other.backward = dict(self.backward)
        return other

    def assign(self, u: int, v: int) -> bool:
        """Map u to v and propagate every forced image; False on conflict."""
        pending = [(u, v)]
        M, N = self.A.parent, self.B.parent
        while pending:
            u, v = pending.pop()
            if u in self.forward:
                if self.forward[u] != v:
                    return False
                continue
            if v in self.backward or u not in self.A or v not in self.B:
                return False
            if self.weight_a[u] != self.weight_b[v]:
                return False
            self.forward[u] = v
            self.backward[v] = u
            for name in M.signature.unary:
                pending.append((M.tables[name][u], N.tables[name][v]))
            for name in M.signature.binary:
                left, right = M.tables[name], N.tables[name]
                for x, y in list(self.forward.items()):
                    pending.append((left[u][x], right[v][y]))
                    pending.append((left[x][u], right[y][v]))
        return True


def _singleton_weights(A: GenSub) -> dict[int, int]:
    return {x: len(_close(A.parent, (x,))) for x in A.carrier}


def iter_isomorphisms(
    A: GenSub, B: GenSub, fixed: Mapping[int, int] | None = None
) -> Iterator[dict[int, int]]:
    """
    Every isomorphism A -> B extending `fixed`. Images of a generating set of
    A are chosen by backtracking; everything else is forced by propagation.
    """
    _check_compatible(A, B)
    if len(A) != len(B):
        return
    weight_a, weight_b = _singleton_weights(A), _singleton_weights(B)
    start = _PartialMap(A, B, weight_a, weight_b)
    for u, v in (fixed or {}).items():
        if not start.assign(u, v):
            return
    gens = _generators(A, weight_a)
    candidates = sorted(B.carrier)

    def search(i: int, partial: _PartialMap) -> Iterator[dict[int, int]]:
        if i == len(gens):
            if len(partial.forward) == len(A):
                yield dict(partial.forward)
            return
        g = gens[i]
        if g in partial.forward:
            yield from search(i + 1, partial)
            return
        for v in candidates:
            if v in partial.backward or weight_b[v] != weight_a[g]:
                continue
            attempt = partial.copy()
            if attempt.assign(g, v):
                yield from search(i + 1, attempt)

    yield from search(0, start)


def find_isomorphism(
    A: GenSub, B: GenSub, fixed: Mapping[int, int] | None = None
) -> dict[int, int] | None:
    return next(iter_isomorphisms(A, B, fixed), None)


def is_isomorphism(A: GenSub, B: GenSub, mapping: Mapping[int, int]) -> bool:
    if set(mapping) != set(A.carrier) or set(mapping.values()) != set(B.carrier):
        return False
    M, N = A.parent, B.parent
    for name in M.signature.unary:
        if any(mapping[M.tables[name][x]] != N.tables[name][mapping[x]] for x in A.carrier):
            return False
    for name in M.signature.binary:
        left, right = M.tables[name], N.tables[name]
        for x in A.carrier:
            for y in A.carrier:
                if mapping[left[x][y]] != right[mapping[x]][mapping[y]]:
                    return False
    return True


def is_uniform(X: Sequence[GenSub]) -> bool:
    return all(find_isomorphism(X[0], B) is not None for B in X[1:])


def is_strongly_uniform(X: Sequence[GenSub]) -> bool:
    for i, A in enumerate(X):
        for B in X[i + 1 :]:
            common = A.carrier & B.carrier
            if find_isomorphism(A, B, fixed={x: x for x in common}) is None:
                return False
    return True


@dataclass(frozen=True)
class NonExtending:
    source: frozenset[int]
    target: frozenset[int]
    mapping: dict[int, int] = field(compare=False)


@dataclass(frozen=True)
class ExtensionReport:
    checked: int
    failures: tuple[NonExtending, ...]
    truncated: bool = False

    @property
    def ok(self) -> bool:
        return not self.failures


def extension_check(M: FinStructure, size_bound: int, cap: int = 10_000) -> ExtensionReport:
    """
    For every isomorphism between substructures of size <= size_bound, look
    for an automorphism of the finite structure extending it. This is only a
    necessary condition for ultrahomogeneity of an infinite structure that M
    is a fragment of.
    """
    listing = substructures_up_to(M, size_bound, cap)
    whole = M.whole()
    checked = 0
    failures = []
    for A in listing.subs:
        for B in listing.subs:
            if len(A) != len(B):
                continue
            for sigma in iter_isomorphisms(A, B):
                checked += 1
                if find_isomorphism(whole, whole, fixed=sigma) is None:
                    failures.append(NonExtending(A.carrier, B.carrier, sigma))
    logger.info("extension check: %d isomorphisms, %d do not extend", checked, len(failures))
    return ExtensionReport(checked, tuple(failures), listing.truncated)


def carrier_family(subs: Sequence[GenSub]) -> list[frozenset[int]]:
    return [sub.carrier for sub in subs]


def structure_from_json(payload: Any, *, path: str | None = None) -> FinStructure:
    try:
        signature = Signature(tuple(Symbol(str(s["name"]), int(s["arity"])) for s in payload["signature"]))
        return FinStructure(signature, int(payload["size"]), dict(payload["tables"]))
    except (KeyError, TypeError, ValueError) as e:
        raise FormatError(f"malformed structure: {e}", path=path) from e


def structure_to_json(M: FinStructure) -> dict[str, Any]:
    tables: dict[str, list] = {}
    for symbol in M.signature.symbols:
        table = M.tables[symbol.name]
        tables[symbol.name] = [list(row) for row in table] if symbol.arity == 2 else list(table)
    return {
        "signature": [{"name": s.name, "arity": s.arity} for s in M.signature.symbols],
        "size": M.size,
        "tables": tables,
    }


def load_structure(path: str | Path) -> FinStructure:
    return structure_from_json(read_json(path), path=str(path))
