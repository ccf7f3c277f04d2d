"""
Verification suites run by `algsunflower verify`, and the report they fill.

Every suite is deterministic given its parameters and seed. Wall-times are
kept apart from the results section so that two runs can be compared byte
for byte.
"""

import itertools
import logging
import time
from collections.abc import Iterator, Sequence
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, ClassVar

import numpy as np
from more_itertools import powerset

from algsunflower.algcore import (
    extension_check,
    find_isomorphism,
    is_isomorphism,
    is_strongly_uniform,
    iter_isomorphisms,
)
from algsunflower.bounds import (
    MonotoneMap,
    derived_sf_bound,
    er_bound,
    gamma,
    gamma_circ,
    gamma_floor,
    synth_beta,
    thm_bound,
)
from algsunflower.cache import write_certificate
from algsunflower.errors import CertificateFailure, FormatError
from algsunflower.flora import (
    BetaFn,
    Embedding,
    MkFragmentSpec,
    NBetaElement,
    base_of,
    build_mk_fragment,
    carrier_sunflower,
    chain_has_sunflower,
    extend_base_bijection,
    is_symbolic_isomorphism,
    materialize,
    mk_sunflower_check,
    nbeta_closure,
    nbeta_empirical_sf,
    nbeta_pad,
    nested_chain,
    raw_closure,
    sap_amalgamate,
    single_generator,
    strong_uniformize,
    sub_from_base,
    transfer_sunflower,
)
from algsunflower.setcore import is_sunflower, pad_family, random_family, subfamily_sunflowers
from algsunflower.sfsearch import SearchBudget, SfAnswer, empirical_sf_check, exact_sf, sample_universe
from algsunflower.utils import humanize_seconds, parallel_map, spawn_rngs

logger = logging.getLogger(__name__)

SUITES = ("invariants", "proposition", "theorem")
DEFAULT_ALPHAS = ("affine:1,3", "affine:2,3", "table:3,3,4,4,6,6,9;2")

# an answer and the path its certificate was written to
Certified = tuple[SfAnswer, str | None]


@dataclass
class Tally:
    checked: int = 0
    failed: int = 0


@dataclass
class ExperimentReport:
    suite: str
    parameters: dict[str, Any]
    cells: list[dict[str, Any]] = field(default_factory=list)
    tallies: dict[str, Tally] = field(default_factory=dict)
    failures: list[dict[str, Any]] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    formulas: dict[str, str] = field(default_factory=dict)
    timings: dict[str, float] = field(default_factory=dict)

    MAX_DUMPED: ClassVar[int] = 20

    def record(self, name: str, checked: int, counterexamples: Sequence[Any] = ()) -> None:
        tally = self.tallies.setdefault(name, Tally())
        tally.checked += checked
        tally.failed += len(counterexamples)
        for counterexample in counterexamples:
            logger.error("%s failed on %s", name, counterexample)
            if len(self.failures) < self.MAX_DUMPED:
                self.failures.append({"check": name, "counterexample": counterexample})

    def check(self, name: str, passed: bool, counterexample: Any = None) -> bool:
        self.record(name, 1, () if passed else (counterexample,))
        return passed

    @contextmanager
    def timed(self, phase: str) -> Iterator[None]:
        logger.info("%s: %s", self.suite, phase)
        start = time.perf_counter()
        try:
            yield
        finally:
            self.timings[phase] = time.perf_counter() - start

    @property
    def failure_count(self) -> int:
        return sum(t.failed for t in self.tallies.values())

    @property
    def ok(self) -> bool:
        return self.failure_count == 0

    def to_json(self) -> dict[str, Any]:
        return {
            "suite": self.suite,
            "parameters": self.parameters,
            "results": {
                "cells": self.cells,
                "tallies": {name: {"checked": t.checked, "failed": t.failed} for name, t in self.tallies.items()},
                "failures": self.failures,
                "notes": self.notes,
                "formulas": self.formulas,
            },
            "timings": self.timings,
            "ok": self.ok,
        }

    @classmethod
    def from_json(cls, payload: Any, *, path: str | None = None) -> "ExperimentReport":
        try:
            results = payload["results"]
            return cls(
                suite=str(payload["suite"]),
                parameters=dict(payload["parameters"]),
                cells=list(results["cells"]),
                tallies={name: Tally(int(t["checked"]), int(t["failed"])) for name, t in results["tallies"].items()},
                failures=list(results["failures"]),
                notes=list(results["notes"]),
                formulas=dict(results.get("formulas", {})),
                timings={k: float(v) for k, v in payload.get("timings", {}).items()},
            )
        except (KeyError, TypeError, ValueError, AttributeError) as e:
            raise FormatError(f"malformed report: {e}", path=path) from e

    def render_table(self) -> str:
        lines = [f"suite {self.suite}: {'ok' if self.ok else f'{self.failure_count} failures'}"]
        lines.append("parameters: " + ", ".join(f"{k}={v}" for k, v in self.parameters.items()))
        if self.cells:
            columns = list(dict.fromkeys(key for cell in self.cells for key in cell))
            rows = [[str(cell.get(c, "")) for c in columns] for cell in self.cells]
            widths = [max(len(c), *(len(r[i]) for r in rows)) for i, c in enumerate(columns)]
            lines.append("")
            lines.append("  ".join(c.rjust(w) for c, w in zip(columns, widths)))
            lines.append("  ".join("-" * w for w in widths))
            lines.extend("  ".join(v.rjust(w) for v, w in zip(row, widths)) for row in rows)
            lines.extend(f"{column} = {formula}" for column, formula in self.formulas.items() if column in columns)
        if self.tallies:
            width = max(len(name) for name in self.tallies)
            lines.append("")
            lines.append(f"{'check'.ljust(width)}  {'checked':>8}  {'failed':>6}")
            for name, t in self.tallies.items():
                lines.append(f"{name.ljust(width)}  {t.checked:>8}  {t.failed:>6}")
        for note in self.notes:
            lines.append(f"note: {note}")
        for failure in self.failures:
            lines.append(f"FAILED {failure['check']}: {failure['counterexample']}")
        if self.timings:
            lines.append("")
            lines.extend(f"{phase}: {humanize_seconds(s)}" for phase, s in self.timings.items())
        return "\n".join(lines) + "\n"


def _sets(family: Sequence[frozenset[int]]) -> list[list[int]]:
    return [sorted(m) for m in family]


def _random_base(rng: np.random.Generator, atoms: int, max_size: int) -> frozenset[int]:
    size = int(rng.integers(0, max_size + 1))
    return frozenset(int(a) for a in rng.choice(atoms, size=size, replace=False))


def _check_padding(report: ExperimentReport, cases: int, seed: int) -> None:
    for rng in spawn_rngs(seed, cases):
        family = random_family(rng, int(rng.integers(1, 9)), 3, 6)
        padded = pad_family(family, 3).family
        uniform = all(len(m) == 3 for m in padded) and all(a <= b for a, b in zip(family, padded))
        report.check("padding/uniform", uniform, _sets(family))
        mismatch = next(
            (
                indices
                for indices in powerset(range(len(family)))
                if (is_sunflower(family.subfamily(indices)) is None)
                != (is_sunflower(padded.subfamily(indices)) is None)
            ),
            None,
        )
        report.check("padding/sunflowers", mismatch is None, {"family": _sets(family), "subfamily": mismatch})


def _certify(
    report: ExperimentReport, answer: SfAnswer, budget: SearchBudget, certificate_dir: Path | None
) -> Certified:
    path = write_certificate(answer, budget, certificate_dir)
    if path is None:
        note = "no certificate directory; exact values were not written to disk"
        if note not in report.notes:
            report.notes.append(note)
    return answer, str(path) if path is not None else None


def _exact(
    report: ExperimentReport,
    n: int,
    k: int,
    budget: SearchBudget,
    threads: int,
    memo: dict[tuple[int, int], Certified],
    certificate_dir: Path | None,
) -> Certified:
    if (n, k) not in memo:
        answer = exact_sf(n, k, budget, threads=threads)
        if not answer.exact:
            report.notes.append(f"SF({n}, {k}) stopped at its budget; {answer.value} is a lower bound")
        memo[n, k] = _certify(report, answer, budget, certificate_dir)
    return memo[n, k]


def _check_oracle(report: ExperimentReport, answer: SfAnswer, cases: int, seed: int) -> None:
    n, k, size = answer.n, answer.k, answer.value
    for rng in spawn_rngs(seed, cases):
        family = random_family(rng, size, k, sample_universe(size, k))
        found = next(subfamily_sunflowers(family, n), None)
        report.check("exact/oracle", found is not None, {"n": n, "k": k, "family": _sets(family)})


def _check_uniform_value(
    report: ExperimentReport, answer: SfAnswer, budget: SearchBudget, threads: int
) -> None:
    n, k = answer.n, answer.k
    uniform = exact_sf(n, k, budget, threads=threads, uniform=True)
    case = {"n": n, "k": k, "value": answer.value, "uniform": uniform.value}
    if uniform.exact:
        report.check("exact/padding", uniform.value == answer.value, case)
    padded = pad_family(answer.extremal, k).family
    sunflower = next(subfamily_sunflowers(padded, n), None)
    report.check("exact/padding-free", sunflower is None, case | {"padded": _sets(padded)})


def run_invariants(
    seed: int = 0,
    *,
    cases: int = 500,
    lemma_cases: int = 200,
    oracle_cases: int = 20,
    threads: int = 1,
    budget: SearchBudget | None = None,
    certificate_dir: Path | None = None,
) -> ExperimentReport:
    budget = budget or SearchBudget()
    report = ExperimentReport(
        "invariants",
        {"seed": seed, "cases": cases, "lemma_cases": lemma_cases, "oracle_cases": oracle_cases},
        formulas={"lemma": "k!(n-1)^k"},
    )
    memo: dict[tuple[int, int], Certified] = {}

    with report.timed("padding"):
        _check_padding(report, cases, seed)

    with report.timed("lemma"):
        for n, k in ((3, 2), (3, 3), (2, 5)):
            empirical = empirical_sf_check(n, k, lemma_cases, seed, threads=threads)
            report.cells.append({"cell": f"lemma n={n} k={k}", "size": empirical.size, "found": empirical.found})
            failures = [{"n": n, "k": k, "family": _sets(f)} for f in empirical.failures]
            report.record("lemma/guarantee", empirical.count, failures)

    with report.timed("exact values"):
        expected = [(2, k, 2) for k in range(1, 6)] + [(n, 1, n) for n in range(1, 7)] + [(3, 2, 7)]
        for n, k, value in expected:
            answer, certificate = _exact(report, n, k, budget, threads, memo, certificate_dir)
            report.cells.append(
                {
                    "cell": f"SF({n},{k})",
                    "value": answer.value,
                    "status": answer.status,
                    "lemma": er_bound(n, k),
                    "certificate": certificate,
                }
            )
            if answer.exact:
                report.check("exact/value", answer.value == value, {"n": n, "k": k, "value": answer.value})
                report.check("exact/strict-lemma", answer.value <= er_bound(n, k) + 1, {"n": n, "k": k})
                if k >= 2:
                    report.check("exact/lemma", answer.value <= er_bound(n, k), {"n": n, "k": k})
                _check_oracle(report, answer, oracle_cases, seed)
                _check_uniform_value(report, answer, budget, threads)
            if answer.extremal is not None:
                free = next(
                    (g for g in itertools.combinations(answer.extremal, n) if is_sunflower(g) is not None), None
                )
                report.check("exact/extremal-free", free is None, {"n": n, "k": k, "sunflower": free and _sets(free)})
        exact = {cell: answer.value for cell, (answer, _) in memo.items() if answer.exact}
        for (n, k), value in exact.items():
            for larger in ((n + 1, k), (n, k + 1)):
                if larger in exact:
                    report.check("exact/monotone", value <= exact[larger], {"cell": [n, k], "larger": list(larger)})

    with report.timed("certificates"):
        for spec in DEFAULT_ALPHAS:
            try:
                certificate = synth_beta(MonotoneMap.parse(spec), 10**4)
                report.cells.append({"cell": f"beta[{spec}]", "beta": list(certificate.beta.values)})
                report.check("certificate", certificate.ok, spec)
            except CertificateFailure as e:
                report.check("certificate", False, {"alpha": spec, "k": e.k, "error": str(e)})
    return report


def run_proposition(
    ks: Sequence[int] = range(2, 7), *, copies: int = 8, max_n: int = 5, threads: int = 1
) -> ExperimentReport:
    report = ExperimentReport("proposition", {"ks": list(ks), "copies": copies, "max_n": max_n})
    with report.timed("families"):
        grid = [(k, n) for k in ks for n in range(1, min(max_n, copies) + 1)]
        checks = parallel_map(lambda cell: mk_sunflower_check(cell[0], copies, cell[1]), grid, threads=threads)
        for (k, n), result in zip(grid, checks):
            report.cells.append({"k": k, "n": n, "families": result.families, "empirical_sf": result.empirical_sf})
            report.check("proposition/empty-core", not result.failures, {"k": k, "n": n})
            report.check("proposition/sf", result.empirical_sf == n, {"k": k, "n": n, "sf": result.empirical_sf})
    with report.timed("homogeneity"):
        for k in ks:
            if k > 4:
                continue
            extension = extension_check(build_mk_fragment(MkFragmentSpec(k, 3)), k)
            report.check("proposition/extends", extension.ok, {"k": k, "failures": len(extension.failures)})
            if extension.truncated:
                report.notes.append(f"extension check for k={k} truncated")
    return report


def _check_pair(report: ExperimentReport, beta: BetaFn, rng: np.random.Generator) -> None:
    base0, base1 = _random_base(rng, 6, beta.horizon), _random_base(rng, 6, beta.horizon)
    A0, A1 = sub_from_base(beta, base0), sub_from_base(beta, base1)
    case = {"bases": [sorted(base0), sorted(base1)]}

    report.check("b-injectivity", (base_of(A0) == base_of(A1)) == (A0.elements == A1.elements), case)
    report.check("intersection", A0.elements & A1.elements == sub_from_base(beta, base0 & base1).elements, case)
    report.check("size-law", len(A0.elements) == gamma(beta, len(base0)) and base_of(A0) == base0, case)
    if base0:
        g = single_generator(A0)
        recovered = nbeta_closure(beta, [g]) == A0 and raw_closure(beta, [g]) == A0.elements
        report.check("single-generator", recovered, case)

    if len(base0) != len(base1):
        return
    targets = sorted(base1)
    mapping = {a: targets[int(i)] for a, i in zip(sorted(base0), rng.permutation(len(targets)))}
    M0, M1 = materialize(beta, base0), materialize(beta, base1)
    W0, W1 = M0.structure.whole(), M1.structure.whole()
    indices = {M0.index[x]: M1.index[y] for x, y in extend_base_bijection(A0, A1, mapping).items()}
    report.check("iso-extension", is_isomorphism(W0, W1, indices), case)
    # exhaustive enumeration only where it is cheap
    if len(A0) <= gamma(beta, min(2, beta.horizon)):
        fixed = {M0.index[NBetaElement((a,))]: M1.index[NBetaElement((b,))] for a, b in mapping.items()}
        report.check("iso-extension/unique", list(iter_isomorphisms(W0, W1, fixed)) == [indices], case)
        report.check("iso/equal-size", find_isomorphism(W0, W1) is not None, case)


def _check_transfer(report: ExperimentReport, beta: BetaFn, rng: np.random.Generator) -> None:
    bases = {_random_base(rng, 6, beta.horizon) for _ in range(int(rng.integers(2, 5)))}
    X = [sub_from_base(beta, base) for base in sorted(bases, key=sorted)]
    case = {"bases": [sorted(A.base) for A in X]}

    verdict, core = transfer_sunflower(X)
    direct = carrier_sunflower(X)
    agrees = verdict == (direct is not None) and (not verdict or core is not None and core.elements == direct)
    report.check("transfer", agrees, case)

    padded, _ = nbeta_pad(X)
    size = max(len(A.base) for A in X)
    preserved = all(len(P.base) == size and A.base <= P.base for A, P in zip(X, padded)) and all(
        transfer_sunflower([X[i] for i in group])[0] == transfer_sunflower([padded[i] for i in group])[0]
        for group in powerset(range(len(X)))
    )
    report.check("padding/transfer", preserved, case)


def _check_uniform_sunflower(report: ExperimentReport, beta: BetaFn, rng: np.random.Generator) -> None:
    # all members live inside one materialized parent on atoms 0..atoms-1
    atoms = min(beta.horizon, 3)
    pool = [frozenset(c) for c in itertools.combinations(range(atoms), int(rng.integers(1, atoms + 1)))]
    picks = rng.choice(len(pool), size=int(rng.integers(1, len(pool) + 1)), replace=False)
    X = [sub_from_base(beta, pool[int(i)]) for i in sorted(picks)]
    if not transfer_sunflower(X)[0]:
        return
    case = {"bases": [sorted(A.base) for A in X]}

    witnesses = strong_uniformize(X)
    fixes_core = all(
        is_symbolic_isomorphism(X[w.source], X[w.target], w.mapping)
        and all(w.mapping[x] == x for x in X[w.source].elements & X[w.target].elements)
        for w in witnesses
    )
    report.check("strong-uniformity/witnesses", fixes_core, case)
    parent = materialize(beta, range(atoms))
    report.check("strong-uniformity", is_strongly_uniform([parent.sub(A.base) for A in X]), case)


def _check_amalgamation(report: ExperimentReport, beta: BetaFn, rng: np.random.Generator) -> None:
    shared = int(rng.integers(0, 2))
    extra_b = int(rng.integers(0, beta.horizon - shared + 1))
    extra_c = int(rng.integers(0, beta.horizon - shared - extra_b + 1))
    offset = 2 * beta.horizon
    A = sub_from_base(beta, range(shared))
    into_B = Embedding(A, sub_from_base(beta, range(shared + extra_b)), {a: a for a in A.base})
    into_C = Embedding(A, sub_from_base(beta, range(offset, offset + shared + extra_c)), {a: a + offset for a in A.base})
    i1, j1 = sap_amalgamate(beta, A, into_B, into_C)
    via_b = {i1.apply(into_B.apply(x)) for x in A.carrier()}
    via_c = {j1.apply(into_C.apply(x)) for x in A.carrier()}
    report.check(
        "amalgamation",
        via_b == via_c and i1.image() & j1.image() == via_b,
        {"shared": shared, "extra": [extra_b, extra_c]},
    )


THEOREM_FORMULAS = {
    "m": "least m with gamma(m) >= k",
    "derived": "m!(n-1)^(m!)",
    "strict": "m!(n-1)^(m!) + 1",
    "thm": "alpha(k)(n-1)^alpha(k)",
}


def _theorem_cells(
    report: ExperimentReport,
    alpha_spec: str,
    budget: SearchBudget,
    threads: int,
    certificate_dir: Path | None,
) -> None:
    alpha = MonotoneMap.parse(alpha_spec)
    beta = synth_beta(alpha, 10**4).beta
    report.parameters["synthesized_beta"] = list(beta.values)
    report.formulas.update(THEOREM_FORMULAS)
    memo: dict[tuple[int, int], Certified] = {}
    for n in (2, 3):
        for k in range(gamma(beta, min(2, beta.horizon)) + 1):
            base_size = gamma_floor(beta, k)
            if (n, base_size) not in memo:
                answer = nbeta_empirical_sf(beta, n, k, budget, threads=threads)
                if not answer.exact:
                    report.notes.append(f"SF({n}, {base_size}) stopped at its budget; value is a lower bound")
                memo[n, base_size] = _certify(report, answer, budget, certificate_dir)
            answer, certificate = memo[n, base_size]
            empirical = answer.value
            m = gamma_circ(beta, k)
            derived = derived_sf_bound(beta, n, k)
            strict = derived_sf_bound(beta, n, k, strict=True)
            bound = thm_bound(alpha, n, k)
            cell = {
                "n": n,
                "k": k,
                "m": m,
                "empirical": empirical,
                "derived": derived,
                "strict": strict,
                "thm": bound,
                "certificate": certificate,
            }
            report.cells.append(cell)
            report.check("sf-bound/thm-bound", empirical <= bound, cell)
            report.check("sf-bound/strict", empirical <= strict, cell)
            report.check("sf-bound/chain", derived <= bound, cell)
            if empirical > derived and m <= 1:
                report.notes.append(f"n={n} k={k}: SF {empirical} exceeds {m}!(n-1)^{m}! = {derived}")
            else:
                report.check("sf-bound/derived", empirical <= derived, cell)


def _check_chain(report: ExperimentReport, length: int = 5) -> None:
    beta = BetaFn(tuple(range(3, 3 + length)))
    chain = nested_chain(beta, length)
    report.check(
        "chain/one-generated",
        all(nbeta_closure(beta, [single_generator(A)]) == A for A in chain),
        {"length": length},
    )
    report.check("chain/no-sunflower", not chain_has_sunflower(chain, 3), {"length": length})


def run_theorem(
    seed: int = 0,
    *,
    cases: int = 1000,
    beta: BetaFn | None = None,
    alpha: str = "affine:1,3",
    threads: int = 1,
    budget: SearchBudget | None = None,
    certificate_dir: Path | None = None,
) -> ExperimentReport:
    beta = beta or BetaFn((3, 4, 5))
    budget = budget or SearchBudget()
    report = ExperimentReport(
        "theorem", {"seed": seed, "cases": cases, "beta": list(beta.values), "alpha": alpha}
    )
    with report.timed("substructures"):
        for rng in spawn_rngs(seed, cases):
            _check_pair(report, beta, rng)
            _check_transfer(report, beta, rng)
            _check_uniform_sunflower(report, beta, rng)
            _check_amalgamation(report, beta, rng)
    with report.timed("bounds"):
        _theorem_cells(report, alpha, budget, threads, certificate_dir)
    with report.timed("chain"):
        _check_chain(report)
    return report
