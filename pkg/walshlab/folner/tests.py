from fractions import Fraction

import numpy as np
from django.core.exceptions import ValidationError
from django.test import SimpleTestCase, override_settings
from hypothesis import given, settings as hypothesis_settings, strategies as st

from folner.models import FolnerSet
from folner.serializers import CeilSerializer, FolnerSetSerializer, PhiSerializer
from folner.services import FolnerService
from polymap.models import GroupModel
from utils.exceptions import SearchCapExceeded

Z1 = GroupModel.zr(1)
Z2 = GroupModel.zr(2)
HEIS = GroupModel.heis()


def random_element(rng, model, bound=3):
    return tuple(int(c) for c in rng.integers(-bound, bound + 1, size=model.arity))


class FolnerSetTest(SimpleTestCase):
    def setUp(self):
        self.rng = np.random.default_rng(404)

    def test_measure(self):
        self.assertEqual(FolnerService.measure(FolnerSet(Z1, 5)), 5)
        self.assertEqual(FolnerService.measure(FolnerSet(HEIS, 3)), 81)
        self.assertEqual(len(FolnerService.members(FolnerSet(HEIS, 3))), 81)
        self.assertEqual(FolnerSet(Z2, 4).floor, 4)

    def test_shift_invariance(self):
        for k in range(100):
            model = (Z1, Z2, HEIS)[k % 3]
            N = 2 if model == HEIS else 4
            I = FolnerSet(model, N, random_element(self.rng, model), random_element(self.rng, model))
            self.assertEqual(len(FolnerService.members(I)), FolnerService.measure(I))

    def test_contains_matches_members(self):
        I = FolnerSet(HEIS, 2, (1, -1, 2), (0, 2, -1))
        members = FolnerService.members(I)
        for x in members:
            self.assertTrue(FolnerService.contains(I, x))
        self.assertFalse(FolnerService.contains(I, (10, 10, 10)))

    def test_invalid(self):
        with self.assertRaises(ValidationError):
            FolnerSet(Z1, 0)
        with self.assertRaises(ValidationError):
            FolnerSet(HEIS, 2, (1, 2))


class SymdiffTest(SimpleTestCase):
    def setUp(self):
        self.rng = np.random.default_rng(77)

    def test_interval_shift(self):
        self.assertEqual(FolnerService.symdiff_ratio(Z1, (1,), 10), Fraction(2, 10))
        self.assertEqual(FolnerService.symdiff_ratio(Z1, (0,), 10), 0)
        self.assertEqual(FolnerService.symdiff_ratio(Z1, (12,), 10), 2)

    def test_heisenberg_against_enumeration(self):
        self.assertEqual(
            FolnerService.symdiff_ratio(HEIS, (1, 0, 0), 4),
            FolnerService.symdiff_by_enumeration(FolnerSet(HEIS, 4), (1, 0, 0)),
        )
        for _ in range(30):
            N = int(self.rng.integers(1, 5))
            l = random_element(self.rng, HEIS)
            base = FolnerService.members(FolnerSet(HEIS, N))
            shifted = set(FolnerService.translate_points(HEIS, base, l))
            self.assertEqual(FolnerService.intersection_count(HEIS, l, N), len(base & shifted))

    def test_box_against_enumeration(self):
        for _ in range(30):
            N = int(self.rng.integers(1, 7))
            l = random_element(self.rng, Z2, 5)
            self.assertEqual(
                FolnerService.symdiff_ratio(Z2, l, N),
                FolnerService.symdiff_by_enumeration(FolnerSet(Z2, N), l),
            )

    def test_right_shift_does_not_matter(self):
        for model in (Z2, HEIS):
            for _ in range(10):
                l = random_element(self.rng, model)
                b = random_element(self.rng, model, 5)
                self.assertEqual(
                    FolnerService.symdiff_by_enumeration(FolnerSet(model, 3, None, b), l),
                    FolnerService.symdiff_ratio(model, l, 3),
                )

    def test_decay(self):
        ratios = [FolnerService.symdiff_ratio(Z2, (2, -1), N) for N in range(1, 40)]
        self.assertTrue(all(x >= y for x, y in zip(ratios, ratios[1:])))
        self.assertLess(ratios[-1], Fraction(1, 5))
        sampled = [FolnerService.symdiff_ratio(HEIS, (1, 1, 1), N) for N in (5, 10, 20, 40)]
        self.assertTrue(all(x > y for x, y in zip(sampled, sampled[1:])))

    def test_table(self):
        table = FolnerService.sup_ratio_table(Z1, 3, [1, 4, 8])
        self.assertEqual(table, [(1, 2), (4, Fraction(1)), (8, Fraction(1, 2))])


class PhiTest(SimpleTestCase):
    def setUp(self):
        self.rng = np.random.default_rng(8)

    def test_integers_closed_form(self):
        for _ in range(30):
            L = int(self.rng.integers(1, 12))
            gamma = Fraction(int(self.rng.integers(1, 9)), int(self.rng.integers(1, 5)))
            result = FolnerService.phi(Z1, gamma, L)
            shifts = [(l,) for l in range(L)]
            self.assertLess(FolnerService.sup_ratio(Z1, shifts, result.N), gamma)
            if result.N > 1:
                self.assertGreaterEqual(FolnerService.sup_ratio(Z1, shifts, result.N - 1), gamma)
            self.assertTrue(result.verified_monotone)
            if gamma <= 2:
                self.assertEqual(result.N, int(2 * (L - 1) // gamma) + 1)

    def test_trivial_window(self):
        self.assertEqual(FolnerService.phi(Z1, Fraction(1), 1).N, 1)

    def test_boxes(self):
        result = FolnerService.phi(Z2, Fraction(1, 3), 3)
        shifts = list(FolnerSet(Z2, 3).canonical())
        self.assertLess(FolnerService.sup_ratio(Z2, shifts, result.N), Fraction(1, 3))
        self.assertGreaterEqual(FolnerService.sup_ratio(Z2, shifts, result.N - 1), Fraction(1, 3))

    def test_heisenberg(self):
        result = FolnerService.phi(HEIS, Fraction(1, 2), 2)
        shifts = list(FolnerSet(HEIS, 2).canonical())
        for N in range(1, result.N):
            self.assertGreaterEqual(FolnerService.sup_ratio(HEIS, shifts, N), Fraction(1, 2))
        self.assertLess(result.sup_ratio, Fraction(1, 2))
        self.assertTrue(result.verified_monotone)

    def test_cap(self):
        with self.assertRaises(SearchCapExceeded):
            FolnerService.phi(Z1, Fraction(1, 100), 50, search_cap=10)
        with override_settings(FOLNER_SEARCH_CAP=5):
            with self.assertRaises(SearchCapExceeded):
                FolnerService.phi(HEIS, Fraction(1, 10), 2)

    def test_gamma_positive(self):
        with self.assertRaises(ValidationError):
            FolnerService.phi(Z1, Fraction(0), 3)


class InclusionTest(SimpleTestCase):
    def test_examples(self):
        K = [(x,) for x in range(10)]
        self.assertTrue(FolnerService.approx_included(K, FolnerSet(Z1, 10, (2,)), Fraction(1, 4)))
        self.assertFalse(FolnerService.approx_included(K, FolnerSet(Z1, 10, (2,)), Fraction(1, 5)))
        self.assertTrue(FolnerService.approx_included(K[:4], FolnerSet(Z1, 10), Fraction(1, 1000)))
        self.assertFalse(FolnerService.approx_included(K, FolnerSet(Z1, 3, (50,)), Fraction(99, 100)))

    def test_empty(self):
        with self.assertRaises(ValidationError):
            FolnerService.approx_included([], FolnerSet(Z1, 3), Fraction(1, 2))

    @hypothesis_settings(deadline=None, max_examples=50)
    @given(st.tuples(st.integers(-5, 5), st.integers(-5, 5), st.integers(-5, 5)),
           st.tuples(st.integers(-5, 5), st.integers(-5, 5), st.integers(-5, 5)))
    def test_expectation_shift(self, a, b):
        def f(n):
            return Fraction((3 * n[0] - n[1]) % 7, 1 + abs(n[2]) % 5)

        I = FolnerSet(HEIS, 2)
        shifted = FolnerSet(HEIS, 2, a, b)
        self.assertEqual(
            FolnerService.expectation(FolnerService.members(shifted), f),
            FolnerService.shifted_expectation(HEIS, I.canonical(), f, a, b),
        )


class CeilTest(SimpleTestCase):
    def setUp(self):
        self.rng = np.random.default_rng(1234)

    def test_interval_example(self):
        left, right = FolnerSet(Z1, 10), FolnerSet(Z1, 10, (5,))
        result = FolnerService.ceil(left, right, Fraction(1, 2))
        self.assertEqual(result.beta, Fraction(1, 3))
        self.assertEqual(result.proof_n, 43)
        self.assertEqual(result.n0, 7)
        self.assertEqual(result.witnesses[7], (4,))
        self.assertTrue(result.verified_monotone)
        self.assertIsNone(FolnerService.ceil_witness(left, right, Fraction(1, 2), 6))

    def test_witness_by_exhaustive_scan(self):
        left, right = FolnerSet(Z1, 10), FolnerSet(Z1, 10, (5,))
        gamma = Fraction(1, 2)
        for N in range(1, 20):
            exists = any(
                FolnerService.approx_included(FolnerService.members(left), FolnerSet(Z1, N, None, (b,)), gamma)
                and FolnerService.approx_included(FolnerService.members(right), FolnerSet(Z1, N, None, (b,)), gamma)
                for b in range(-N - 5, 20)
            )
            self.assertEqual(FolnerService.ceil_witness(left, right, gamma, N) is not None, exists)

    def test_same_set(self):
        for model, N in ((Z1, 6), (Z2, 3), (HEIS, 2)):
            I = FolnerSet(model, N)
            result = FolnerService.ceil(I, I, Fraction(1, 2))
            self.assertLessEqual(result.n0, N)
            self.assertEqual(FolnerService.ceil_witness(I, I, Fraction(1, 2), N), model.identity())

    def test_random_cases(self):
        for _ in range(20):
            left = FolnerSet(Z1, int(self.rng.integers(3, 7)), (int(self.rng.integers(0, 5)),))
            right = FolnerSet(Z1, int(self.rng.integers(3, 7)), (int(self.rng.integers(0, 5)),))
            gamma = (Fraction(1, 2), Fraction(2, 3), Fraction(1))[int(self.rng.integers(0, 3))]
            result = FolnerService.ceil(left, right, gamma)
            for N in range(result.n0, result.proof_n + 1):
                b = result.witnesses[N]
                shifted = FolnerSet(Z1, N, None, b)
                self.assertTrue(FolnerService.approx_included(FolnerService.members(left), shifted, gamma))
                self.assertTrue(FolnerService.approx_included(FolnerService.members(right), shifted, gamma))
            for N in range(result.proof_n, result.proof_n + 3):
                self.assertIsNotNone(FolnerService.ceil_witness(left, right, gamma, N))
            if result.n0 > 1:
                self.assertIsNone(FolnerService.ceil_witness(left, right, gamma, result.n0 - 1))

    def test_heisenberg_points(self):
        left, right = FolnerSet(HEIS, 1), FolnerSet(HEIS, 1, (1, 0, 0))
        result = FolnerService.ceil(left, right, Fraction(1, 2))
        b = result.witnesses[result.n0]
        shifted = FolnerSet(HEIS, result.n0, None, b)
        self.assertTrue(FolnerService.approx_included(FolnerService.members(left), shifted, Fraction(1, 2)))

    @override_settings(FOLNER_MONOTONE_WINDOW=8)
    def test_heisenberg_threshold_window(self):
        left, right = FolnerSet(HEIS, 1), FolnerSet(HEIS, 1, (1, 0, 0))
        result = FolnerService.ceil(left, right, Fraction(1, 2))
        K = FolnerService.members(left) | FolnerService.members(right)
        differences = {HEIS.mul(k0, HEIS.inv(k)) for k0 in K for k in K}
        expected = all(FolnerService.sup_ratio(HEIS, differences, N) < 2 * result.beta
                       for N in range(result.proof_n + 1, result.proof_n + 9))
        self.assertEqual(result.verified_monotone, expected)

    @override_settings(FOLNER_EXHAUSTIVE_CANDIDATES=10)
    def test_candidate_cap(self):
        with self.assertRaises(SearchCapExceeded):
            FolnerService.ceil_witness(FolnerSet(Z1, 10), FolnerSet(Z1, 10), Fraction(1, 2), 5)


class FolnerSerializerTest(SimpleTestCase):
    def test_set(self):
        serializer = FolnerSetSerializer(data={"model": {"kind": "heis"}, "N": 3, "b": [1, 0, 0]})
        self.assertTrue(serializer.is_valid(), serializer.errors)
        self.assertEqual(serializer.validated_data["instance"].right, (1, 0, 0))

    def test_bad_shift(self):
        self.assertFalse(FolnerSetSerializer(data={"model": {"kind": "zr", "rank": 2}, "N": 3, "a": [1]}).is_valid())

    def test_phi(self):
        serializer = PhiSerializer(data={"model": {"kind": "zr"}, "gamma": "1/2", "L": 3})
        self.assertTrue(serializer.is_valid(), serializer.errors)
        self.assertFalse(PhiSerializer(data={"model": {"kind": "zr"}, "gamma": "0", "L": 3}).is_valid())

    def test_ceil(self):
        data = {
            "left": {"model": {"kind": "zr"}, "N": 10},
            "right": {"model": {"kind": "zr"}, "N": 10, "a": [5]},
            "gamma": "1/2",
        }
        self.assertTrue(CeilSerializer(data=data).is_valid())
