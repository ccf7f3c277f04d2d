"""
Canonical forms of finite set families up to relabeling of atoms.

Atoms are colored by iterated refinement over member incidences; remaining
ties are broken by individualizing one atom of the first non-singleton cell
and refining again. Every leaf of that search is a total order of the atoms,
and the least relabeled family over all leaves is the canonical form.
"""

from collections.abc import Iterable, Iterator, Sequence

Form = tuple[tuple[int, ...], ...]


def _rank(signatures: dict[int, tuple]) -> dict[int, int]:
    order = {sig: rank for rank, sig in enumerate(sorted(set(signatures.values())))}
    return {atom: order[sig] for atom, sig in signatures.items()}


def _refine(
    colors: dict[int, int],
    members: Sequence[frozenset[int]],
    incidence: dict[int, list[int]],
) -> dict[int, int]:
    while True:
        member_sigs = [(len(m), tuple(sorted(colors[a] for a in m))) for m in members]
        refined = _rank(
            {
                atom: (colors[atom], tuple(sorted(member_sigs[i] for i in incidence[atom])))
                for atom in colors
            }
        )
        if len(set(refined.values())) == len(set(colors.values())):
            return refined
        colors = refined


def _individualize(colors: dict[int, int], atom: int) -> dict[int, int]:
    target = colors[atom]
    return _rank({a: (c, 0 if a == atom or c != target else 1) for a, c in colors.items()})


def _leaves(
    colors: dict[int, int],
    members: Sequence[frozenset[int]],
    incidence: dict[int, list[int]],
) -> Iterator[dict[int, int]]:
    cells: dict[int, list[int]] = {}
    for atom, color in colors.items():
        cells.setdefault(color, []).append(atom)
    ties = [c for c, atoms in cells.items() if len(atoms) > 1]
    if not ties:
        yield colors
        return
    for atom in sorted(cells[min(ties)]):
        yield from _leaves(_refine(_individualize(colors, atom), members, incidence), members, incidence)


def relabel(members: Iterable[frozenset[int]], labels: dict[int, int]) -> Form:
    return tuple(sorted(tuple(sorted(labels[a] for a in m)) for m in members))


def canonical_labeling(members: Iterable[Iterable[int]]) -> tuple[Form, dict[int, int]]:
    members = [frozenset(m) for m in members]
    atoms = sorted(frozenset().union(*members))
    incidence: dict[int, list[int]] = {a: [] for a in atoms}
    for i, member in enumerate(members):
        for atom in member:
            incidence[atom].append(i)
    start = _refine({a: 0 for a in atoms}, members, incidence)
    best: tuple[Form, dict[int, int]] | None = None
    for labels in _leaves(start, members, incidence):
        form = relabel(members, labels)
        if best is None or form < best[0]:
            best = (form, labels)
    assert best is not None
    return best


def canonical_form(members: Iterable[Iterable[int]]) -> Form:
    return canonical_labeling(members)[0]


def are_isomorphic(first: Iterable[Iterable[int]], second: Iterable[Iterable[int]]) -> bool:
    return canonical_form(first) == canonical_form(second)
