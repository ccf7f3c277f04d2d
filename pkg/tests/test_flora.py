import itertools
import unittest

from hypothesis import given, settings
from hypothesis import strategies as st

from algsunflower.algcore import (
    closure,
    find_isomorphism,
    is_isomorphism,
    is_strongly_uniform,
    iter_isomorphisms,
    substructures_up_to,
)
from algsunflower.bounds import gamma
from algsunflower.errors import FormatError, HorizonExceeded, NoGenerator, PreconditionViolation, SizeCapExceeded
from algsunflower.flora import (
    BetaFn,
    Embedding,
    MkFragmentSpec,
    NBetaElement,
    NBetaSub,
    b_map,
    base_of,
    build_mk_fragment,
    carrier_sunflower,
    chain_has_sunflower,
    extend_base_bijection,
    is_symbolic_isomorphism,
    materialize,
    mk_substructure_family,
    mk_sunflower_check,
    nbeta_apply,
    nbeta_closure,
    nbeta_empirical_sf,
    nbeta_pad,
    nbeta_size,
    nested_chain,
    raw_closure,
    sap_amalgamate,
    single_generator,
    strong_uniformize,
    sub_from_base,
    transfer_sunflower,
)

BETA_34 = BetaFn((3, 4))
BETA_345 = BetaFn((3, 4, 5))

bases = st.frozensets(st.integers(min_value=0, max_value=5), max_size=3)


def e(*entries, rot=0):
    return NBetaElement(entries, rot)


class TestMk(unittest.TestCase):
    def test_orbits(self):
        M = build_mk_fragment(MkFragmentSpec(4, 3))
        self.assertEqual(M.size, 12)
        orbits = {closure(M, [x]).carrier for x in range(12)}
        self.assertEqual(sorted(len(o) for o in orbits), [4, 4, 4])

    def test_identity_for_k_one(self):
        M = build_mk_fragment(MkFragmentSpec(1, 5))
        self.assertEqual(M.tables["f"], (0, 1, 2, 3, 4))

    def test_substructures_are_the_cycles(self):
        M = build_mk_fragment(MkFragmentSpec(4, 3))
        carriers = [s.carrier for s in substructures_up_to(M, 4).subs]
        self.assertEqual(carriers, [frozenset(), {0, 1, 2, 3}, {4, 5, 6, 7}, {8, 9, 10, 11}])
        self.assertEqual(len(mk_substructure_family(4, 3)), 4)

    def test_rejects_empty_fragment(self):
        with self.assertRaises(PreconditionViolation):
            MkFragmentSpec(0, 3)

    def test_sunflower_number(self):
        for k in (1, 2, 3):
            for n in (1, 2, 3, 4):
                result = mk_sunflower_check(k, 5, n)
                self.assertTrue(result.ok, result)
                self.assertEqual(result.empirical_sf, n)


class TestNBetaApply(unittest.TestCase):
    def test_projections(self):
        self.assertEqual(nbeta_apply(BETA_34, "p0", e(0, 1)), e(0))
        self.assertEqual(nbeta_apply(BETA_34, "p1", e(0, 1)), e(1))
        self.assertEqual(nbeta_apply(BETA_345, "p1", e(2, 0, 1)), e(0, 1))

    def test_projections_fix_base_and_rotated_elements(self):
        self.assertEqual(nbeta_apply(BETA_34, "p0", e(0)), e(0))
        self.assertEqual(nbeta_apply(BETA_34, "p1", e(0, 1, rot=2)), e(0, 1, rot=2))

    def test_prepend(self):
        self.assertEqual(nbeta_apply(BETA_34, "a", e(0), e(1)), e(0, 1))
        self.assertEqual(nbeta_apply(BETA_34, "a", e(0), e(0)), e(0))
        self.assertEqual(nbeta_apply(BETA_345, "a", e(0), e(1, 0)), e(0))
        self.assertEqual(nbeta_apply(BETA_34, "a", e(0, rot=1), e(1)), e(0, rot=1))
        self.assertEqual(nbeta_apply(BETA_34, "a", e(0, 2), e(1)), e(0, 2))

    def test_prepend_beyond_horizon(self):
        with self.assertRaises(HorizonExceeded):
            nbeta_apply(BETA_34, "a", e(2), e(0, 1))

    def test_cycles(self):
        x = e(0)
        for _ in range(3):
            x = nbeta_apply(BETA_34, "s", x)
        self.assertEqual(x, e(0))
        self.assertEqual(nbeta_apply(BETA_34, "s", e(0, 1, rot=3)), e(0, 1))
        self.assertEqual(nbeta_apply(BETA_34, "c", e(0, 1, rot=3)), e(0, 1))

    def test_rejects_bad_elements(self):
        with self.assertRaises(PreconditionViolation):
            e(0, 0)
        with self.assertRaises(PreconditionViolation):
            nbeta_apply(BETA_34, "s", e(0, rot=3))
        with self.assertRaises(PreconditionViolation):
            nbeta_apply(BETA_34, "a", e(0))

    def test_element_json(self):
        self.assertEqual(NBetaElement.from_json(e(3, 1, rot=2).to_json()), e(3, 1, rot=2))
        with self.assertRaises(FormatError):
            NBetaElement.from_json({"tuple": [1]})


class TestSubstructures(unittest.TestCase):
    def test_sizes(self):
        self.assertEqual(len(sub_from_base(BETA_34, [])), 0)
        self.assertEqual(len(sub_from_base(BETA_34, [7]).carrier()), 3)
        self.assertEqual(len(sub_from_base(BETA_34, [0, 1]).carrier()), 14)
        self.assertEqual(nbeta_size(BETA_34, 2), 14)

    def test_base_beyond_horizon(self):
        with self.assertRaises(HorizonExceeded):
            sub_from_base(BETA_34, [0, 1, 2])

    def test_membership(self):
        A = sub_from_base(BETA_34, [0, 1])
        self.assertIn(e(1, 0, rot=3), A)
        self.assertNotIn(e(0, 2), A)
        self.assertNotIn(e(0, rot=3), A)

    def test_json(self):
        A = sub_from_base(BETA_34, [4, 2])
        self.assertEqual(A.to_json(), {"beta": [3, 4], "base": [2, 4]})
        self.assertEqual(NBetaSub.from_json(A.to_json()), A)

    @settings(max_examples=50, deadline=None)
    @given(bases)
    def test_base_round_trip_and_size_law(self, base):
        A = sub_from_base(BETA_345, base)
        self.assertEqual(base_of(A), base)
        self.assertEqual(b_map(BETA_345, A.carrier()), base)
        self.assertEqual(len(A.carrier()), gamma(BETA_345, len(base)))
        self.assertEqual(len(A.elements), len(A))

    @settings(max_examples=50, deadline=None)
    @given(bases, bases)
    def test_intersections_commute(self, first, second):
        A0, A1 = sub_from_base(BETA_345, first), sub_from_base(BETA_345, second)
        self.assertEqual(A0.elements & A1.elements, sub_from_base(BETA_345, first & second).elements)
        self.assertEqual(A0.elements == A1.elements, base_of(A0) == base_of(A1))


class TestClosure(unittest.TestCase):
    def test_pair_generates_both_atoms(self):
        A = nbeta_closure(BETA_34, [e(0, 1)], cross_check=True)
        self.assertEqual(A.base, {0, 1})

    def test_rotated_atom(self):
        self.assertEqual(nbeta_closure(BETA_34, [e(5, rot=1)], cross_check=True).base, {5})

    def test_empty(self):
        A = nbeta_closure(BETA_34, [], cross_check=True)
        self.assertEqual(A.base, frozenset())
        self.assertEqual(A.carrier(), ())

    def test_too_many_atoms(self):
        with self.assertRaises(HorizonExceeded):
            nbeta_closure(BETA_34, [e(0), e(1), e(2)])

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.permutations(range(3)).map(tuple), min_size=1, max_size=3), st.data())
    def test_matches_raw_closure(self, tuples, data):
        seeds = []
        for t in tuples:
            m = data.draw(st.integers(min_value=1, max_value=3))
            seeds.append(NBetaElement(t[:m], data.draw(st.integers(min_value=0, max_value=BETA_345(m) - 1))))
        self.assertEqual(raw_closure(BETA_345, seeds), nbeta_closure(BETA_345, seeds).elements)


class TestTransfer(unittest.TestCase):
    def test_star(self):
        X = [sub_from_base(BETA_345, b) for b in ({0, 1}, {0, 2}, {0, 3})]
        verdict, core = transfer_sunflower(X)
        self.assertTrue(verdict)
        self.assertEqual(core.base, {0})
        self.assertEqual(carrier_sunflower(X), core.elements)

    def test_triangle(self):
        X = [sub_from_base(BETA_345, b) for b in ({0, 1}, {1, 2}, {0, 2})]
        self.assertEqual(transfer_sunflower(X), (False, None))
        self.assertIsNone(carrier_sunflower(X))

    def test_two_members(self):
        X = [sub_from_base(BETA_345, b) for b in ({0, 1}, {5})]
        self.assertTrue(transfer_sunflower(X)[0])

    def test_rejects_mixed_beta(self):
        with self.assertRaises(PreconditionViolation):
            transfer_sunflower([sub_from_base(BETA_34, [0]), sub_from_base(BETA_345, [1])])

    @settings(max_examples=60, deadline=None)
    @given(st.lists(bases, min_size=1, max_size=4, unique=True))
    def test_verdict_matches_carriers(self, family):
        X = [sub_from_base(BETA_345, b) for b in family]
        verdict, core = transfer_sunflower(X)
        direct = carrier_sunflower(X)
        self.assertEqual(verdict, direct is not None)
        if verdict:
            self.assertEqual(core.elements, direct)


class TestIsomorphisms(unittest.TestCase):
    def test_base_bijection_extends_uniquely(self):
        A, B = sub_from_base(BETA_34, [0, 1]), sub_from_base(BETA_34, [5, 2])
        extension = extend_base_bijection(A, B, {0: 5, 1: 2})
        self.assertTrue(is_symbolic_isomorphism(A, B, extension))

        M0, M1 = materialize(BETA_34, A.base), materialize(BETA_34, B.base)
        indices = {M0.index[x]: M1.index[y] for x, y in extension.items()}
        fixed = {M0.index[e(0)]: M1.index[e(5)], M0.index[e(1)]: M1.index[e(2)]}
        self.assertEqual(list(iter_isomorphisms(M0.structure.whole(), M1.structure.whole(), fixed)), [indices])

    def test_rejects_non_bijection(self):
        A, B = sub_from_base(BETA_34, [0, 1]), sub_from_base(BETA_34, [2, 3])
        with self.assertRaises(PreconditionViolation):
            extend_base_bijection(A, B, {0: 2, 1: 2})

    def test_equal_sizes_are_isomorphic(self):
        M0, M1 = materialize(BETA_345, [0, 3]), materialize(BETA_345, [1, 2])
        self.assertIsNotNone(find_isomorphism(M0.structure.whole(), M1.structure.whole()))

    def test_strong_uniformity(self):
        X = [sub_from_base(BETA_345, b) for b in ({0, 1}, {0, 2})]
        witnesses = strong_uniformize(X)
        self.assertEqual([(w.source, w.target) for w in witnesses], [(0, 0), (0, 1), (1, 1)])
        between = witnesses[1].mapping
        for x in sub_from_base(BETA_345, [0]).carrier():
            self.assertEqual(between[x], x)
        self.assertTrue(is_symbolic_isomorphism(X[0], X[1], between))

        parent = materialize(BETA_345, [0, 1, 2])
        self.assertTrue(is_strongly_uniform([parent.sub(A.base) for A in X]))

    def test_single_member(self):
        A = sub_from_base(BETA_34, [3])
        [witness] = strong_uniformize([A])
        self.assertEqual(witness.mapping, {x: x for x in A.carrier()})

    def test_strong_uniformize_preconditions(self):
        with self.assertRaises(PreconditionViolation):
            strong_uniformize([sub_from_base(BETA_345, [0]), sub_from_base(BETA_345, [1, 2])])
        triangle = [sub_from_base(BETA_345, b) for b in ({0, 1}, {1, 2}, {0, 2})]
        with self.assertRaises(PreconditionViolation):
            strong_uniformize(triangle)


class TestPadding(unittest.TestCase):
    def test_pad_to_largest(self):
        X = [sub_from_base(BETA_345, b) for b in ({0}, {1, 2}, set())]
        padded, index_map = nbeta_pad(X)
        self.assertEqual([len(P.base) for P in padded], [2, 2, 2])
        for A, P in zip(X, padded):
            self.assertLessEqual(A.elements, P.elements)
        self.assertEqual(index_map, {0: 0, 1: 1, 2: 2})

    @settings(max_examples=40, deadline=None)
    @given(st.lists(bases, min_size=1, max_size=4, unique=True))
    def test_preserves_sunflowers(self, family):
        X = [sub_from_base(BETA_345, b) for b in family]
        padded, _ = nbeta_pad(X)
        for size in range(len(X) + 1):
            for group in itertools.combinations(range(len(X)), size):
                self.assertEqual(
                    transfer_sunflower([X[i] for i in group])[0],
                    transfer_sunflower([padded[i] for i in group])[0],
                )


class TestAmalgamation(unittest.TestCase):
    def test_over_a_point(self):
        A, B, C = (sub_from_base(BETA_345, b) for b in ({0}, {0, 1}, {7, 8}))
        i1, j1 = sap_amalgamate(BETA_345, A, Embedding(A, B, {0: 0}), Embedding(A, C, {0: 7}))
        self.assertEqual(i1.target.base, {0, 1, 9})
        self.assertEqual(i1.image() & j1.image(), sub_from_base(BETA_345, [0]).elements)

    def test_over_empty(self):
        A = sub_from_base(BETA_345, [])
        B, C = sub_from_base(BETA_345, [0]), sub_from_base(BETA_345, [0])
        i1, j1 = sap_amalgamate(BETA_345, A, Embedding(A, B, {}), Embedding(A, C, {}))
        self.assertEqual(i1.image() & j1.image(), frozenset())

    def test_trivial(self):
        A = sub_from_base(BETA_345, [2, 4])
        identity = Embedding(A, A, {2: 2, 4: 4})
        i1, j1 = sap_amalgamate(BETA_345, A, identity, identity)
        self.assertEqual(i1.target, A)
        self.assertEqual(i1.image(), A.elements)
        self.assertEqual(j1.image(), A.elements)

    def test_beyond_horizon(self):
        A = sub_from_base(BETA_345, [])
        B, C = sub_from_base(BETA_345, [0, 1]), sub_from_base(BETA_345, [2, 3])
        with self.assertRaises(HorizonExceeded):
            sap_amalgamate(BETA_345, A, Embedding(A, B, {}), Embedding(A, C, {}))

    def test_rejects_non_injective(self):
        A, B = sub_from_base(BETA_345, [0, 1]), sub_from_base(BETA_345, [0, 1])
        with self.assertRaises(PreconditionViolation):
            Embedding(A, B, {0: 0, 1: 0})


class TestGenerators(unittest.TestCase):
    def test_single_generator(self):
        self.assertEqual(single_generator(sub_from_base(BETA_34, [4])), e(4))
        g = single_generator(sub_from_base(BETA_34, [1, 0]))
        self.assertEqual(g, e(0, 1))
        self.assertEqual(len(raw_closure(BETA_34, [g])), 14)

    def test_empty_has_no_generator(self):
        with self.assertRaises(NoGenerator):
            single_generator(sub_from_base(BETA_34, []))

    def test_nested_chain(self):
        beta = BetaFn((3, 4, 5, 6, 7))
        chain = nested_chain(beta, 5)
        for A in chain:
            self.assertEqual(nbeta_closure(beta, [single_generator(A)]), A)
        self.assertFalse(chain_has_sunflower(chain, 3))
        self.assertTrue(chain_has_sunflower(chain, 2))


class TestMaterialize(unittest.TestCase):
    def test_single_atom(self):
        fragment = materialize(BETA_34, [0])
        M = fragment.structure
        self.assertEqual(M.size, 3)
        self.assertEqual(M.tables["s"], (1, 2, 0))
        self.assertEqual(M.tables["c"], (0, 0, 0))
        self.assertEqual(M.tables["p0"][0], 0)

    def test_empty(self):
        self.assertEqual(materialize(BETA_34, []).structure.size, 0)

    def test_matches_symbolic_operations(self):
        fragment = materialize(BETA_34, [0, 1])
        M = fragment.structure
        self.assertEqual(M.size, 14)
        for i, x in enumerate(fragment.elements):
            for sym in ("s", "c", "p0", "p1"):
                self.assertEqual(fragment.elements[M.apply(sym, i)], nbeta_apply(BETA_34, sym, x))
            for j, y in enumerate(fragment.elements):
                self.assertEqual(fragment.elements[M.apply("a", i, j)], nbeta_apply(BETA_34, "a", x, y))
        self.assertEqual(closure(M, [fragment.index[e(0, 1)]]).carrier, frozenset(range(14)))

    def test_cap(self):
        with self.assertRaises(SizeCapExceeded):
            materialize(BETA_345, [0, 1, 2], cap=20)

    def test_sub(self):
        fragment = materialize(BETA_345, [0, 1, 2])
        self.assertEqual(len(fragment.sub([1, 2])), 14)

    def test_iso_against_symbolic(self):
        M0, M1 = materialize(BETA_34, [0]), materialize(BETA_34, [1])
        mapping = {M0.index[x]: M1.index[y] for x, y in extend_base_bijection(
            sub_from_base(BETA_34, [0]), sub_from_base(BETA_34, [1]), {0: 1}
        ).items()}
        self.assertTrue(is_isomorphism(M0.structure.whole(), M1.structure.whole(), mapping))


class TestEmpiricalSf(unittest.TestCase):
    def test_below_first_cycle(self):
        self.assertEqual(nbeta_empirical_sf(BETA_34, 3, 2).value, 3)
        self.assertEqual(nbeta_empirical_sf(BETA_34, 2, 0).value, 2)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(min_value=1, max_value=5), st.integers(min_value=0, max_value=13))
    def test_never_below_n(self, n, k):
        self.assertGreaterEqual(nbeta_empirical_sf(BETA_34, n, k).value, n)

    def test_single_atoms(self):
        self.assertEqual(nbeta_empirical_sf(BETA_34, 3, 3).value, 3)
        self.assertEqual(nbeta_empirical_sf(BETA_34, 4, 13).value, 4)

    def test_two_atoms(self):
        self.assertEqual(nbeta_empirical_sf(BETA_34, 3, 14).value, 7)


if __name__ == "__main__":
    unittest.main()
