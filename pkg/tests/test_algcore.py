import itertools
import unittest

from hypothesis import given, settings
from hypothesis import strategies as st

from algsunflower.algcore import (
    FinStructure,
    GenSub,
    Signature,
    carrier_family,
    closure,
    extension_check,
    find_isomorphism,
    is_isomorphism,
    is_strongly_uniform,
    is_uniform,
    iter_isomorphisms,
    structure_from_json,
    structure_to_json,
    substructures_up_to,
)
from algsunflower.errors import FormatError, PreconditionViolation

UNARY = Signature.of(f=1)


def unary(*f):
    return FinStructure(UNARY, len(f), {"f": list(f)})


unary_structures = st.integers(min_value=1, max_value=7).flatmap(
    lambda size: st.lists(st.integers(min_value=0, max_value=size - 1), min_size=size, max_size=size)
).map(lambda f: unary(*f))


class TestFinStructure(unittest.TestCase):
    def test_rejects_out_of_range(self):
        with self.assertRaises(PreconditionViolation):
            unary(0, 2)

    def test_rejects_missing_table(self):
        with self.assertRaises(PreconditionViolation):
            FinStructure(Signature.of(f=1, g=1), 1, {"f": [0]})

    def test_rejects_ragged_binary_table(self):
        with self.assertRaises(PreconditionViolation):
            FinStructure(Signature.of(m=2), 2, {"m": [[0, 1], [0]]})

    def test_empty_structure(self):
        M = FinStructure(UNARY, 0, {"f": []})
        self.assertEqual(len(M.whole()), 0)

    def test_gensub_must_be_closed(self):
        with self.assertRaises(PreconditionViolation):
            GenSub(frozenset({0}), unary(1, 0))

    def test_json_round_trip(self):
        M = FinStructure(Signature.of(f=1, m=2), 2, {"f": [1, 0], "m": [[0, 1], [1, 0]]})
        again = structure_from_json(structure_to_json(M))
        self.assertEqual(again.tables, M.tables)
        self.assertEqual(again.signature, M.signature)

    def test_malformed_json(self):
        with self.assertRaises(FormatError):
            structure_from_json({"signature": [{"name": "f"}], "size": 1, "tables": {}})


class TestClosure(unittest.TestCase):
    def test_orbit(self):
        self.assertEqual(closure(unary(1, 2, 0), [0]).carrier, {0, 1, 2})

    def test_empty_seed(self):
        self.assertEqual(closure(unary(1, 2, 0), []).carrier, frozenset())

    def test_fixed_point(self):
        self.assertEqual(closure(unary(0, 0), [0]).carrier, {0})

    def test_binary(self):
        # addition mod 4
        M = FinStructure(Signature.of(add=2), 4, {"add": [[(x + y) % 4 for y in range(4)] for x in range(4)]})
        self.assertEqual(closure(M, [2]).carrier, {0, 2})
        self.assertEqual(closure(M, [1]).carrier, {0, 1, 2, 3})

    def test_seed_out_of_range(self):
        with self.assertRaises(PreconditionViolation):
            closure(unary(0), [3])

    @settings(max_examples=60, deadline=None)
    @given(unary_structures, st.data())
    def test_closure_is_closed_and_least(self, M, data):
        seed = data.draw(st.frozensets(st.integers(min_value=0, max_value=M.size - 1)))
        carrier = closure(M, seed).carrier
        self.assertTrue(seed <= carrier)
        self.assertTrue(all(M.apply("f", x) in carrier for x in carrier))
        for x in carrier - seed:
            self.assertTrue(any(x in closure(M, [s]).carrier for s in seed))


class TestSubstructures(unittest.TestCase):
    def test_cycles(self):
        listing = substructures_up_to(unary(1, 2, 0, 4, 5, 3), 3)
        self.assertEqual(carrier_family(listing.subs), [frozenset(), {0, 1, 2}, {3, 4, 5}])
        self.assertFalse(listing.truncated)

    def test_negative_bound(self):
        self.assertEqual(substructures_up_to(unary(0), -1).subs, ())

    def test_cap(self):
        listing = substructures_up_to(unary(0, 1, 2, 3, 4), 5, cap=3)
        self.assertTrue(listing.truncated)
        self.assertEqual(len(listing.subs), 3)

    @settings(max_examples=40, deadline=None)
    @given(unary_structures)
    def test_matches_brute_force(self, M):
        closed = {
            frozenset(c)
            for size in range(M.size + 1)
            for c in itertools.combinations(range(M.size), size)
            if closure(M, c).carrier == frozenset(c) and size <= 3
        }
        self.assertEqual(set(carrier_family(substructures_up_to(M, 3).subs)), closed)


class TestIsomorphism(unittest.TestCase):
    def test_two_cycles(self):
        M = unary(1, 2, 0, 4, 5, 3)
        A, B = closure(M, [0]), closure(M, [3])
        self.assertEqual(len(list(iter_isomorphisms(A, B))), 3)
        mapping = find_isomorphism(A, B, fixed={0: 4})
        self.assertEqual(mapping, {0: 4, 1: 5, 2: 3})
        self.assertTrue(is_isomorphism(A, B, mapping))

    @settings(max_examples=40, deadline=None)
    @given(unary_structures, st.data())
    def test_symmetric_and_composable(self, M, data):
        elements = st.integers(min_value=0, max_value=M.size - 1)
        A, B, C = (closure(M, [data.draw(elements)]) for _ in range(3))
        forward, backward = find_isomorphism(A, B), find_isomorphism(B, A)
        self.assertEqual(forward is None, backward is None)
        onward = find_isomorphism(B, C)
        if forward is not None and onward is not None:
            self.assertTrue(is_isomorphism(A, C, {x: onward[y] for x, y in forward.items()}))

    def test_sizes_differ(self):
        M = unary(1, 0, 2)
        self.assertIsNone(find_isomorphism(closure(M, [0]), closure(M, [2])))

    def test_empty(self):
        M = unary(0)
        self.assertEqual(find_isomorphism(closure(M, []), closure(M, [])), {})

    def test_not_an_isomorphism(self):
        M = unary(1, 0, 3, 2)
        A, B = closure(M, [0]), closure(M, [2])
        self.assertFalse(is_isomorphism(A, B, {0: 2, 1: 2}))

    def test_uniform_but_not_strongly_uniform(self):
        # f maps 0, 2 to 0 and 1, 3 to 1
        M = unary(0, 1, 0, 1)
        A, B = closure(M, [0, 1, 2]), closure(M, [0, 1, 3])
        self.assertTrue(is_uniform([A, B]))
        self.assertFalse(is_strongly_uniform([A, B]))

    def test_strongly_uniform_cycles(self):
        M = unary(1, 2, 0, 4, 5, 3)
        self.assertTrue(is_strongly_uniform([closure(M, [0]), closure(M, [3])]))


class TestExtensionCheck(unittest.TestCase):
    def test_cycles_extend(self):
        report = extension_check(unary(1, 0, 3, 2), 2)
        self.assertTrue(report.ok)
        self.assertGreater(report.checked, 0)

    def test_non_extending_map(self):
        # {1} -> {4} is an isomorphism of fixed points, but 1 has a preimage and 4 does not
        report = extension_check(unary(1, 1, 3, 2, 4), 1)
        self.assertFalse(report.ok)
        self.assertIn((frozenset({1}), frozenset({4})), [(f.source, f.target) for f in report.failures])

    def test_empty_structure(self):
        report = extension_check(FinStructure(UNARY, 0, {"f": []}), 2)
        self.assertTrue(report.ok)
        self.assertEqual(report.checked, 1)


if __name__ == "__main__":
    unittest.main()
