from fractions import Fraction

import mpmath
import numpy as np
from django.core.exceptions import ValidationError
from django.test import SimpleTestCase

from rates.services import GrowthService
from utils.exceptions import PrecisionAmbiguityError
from vncircle.models import REGION_A, REGION_B, REGION_E, AtomicMeasure, CircleObservable
from vncircle.serializers import VnCaseSerializer, VnSweepSerializer
from vncircle.services import CircleService, precision, to_mpf

EPSILON = Fraction(1, 2)
DOUBLE = GrowthService.parse("2*M")


def observable(*values) -> CircleObservable:
    return CircleObservable(tuple(mpmath.mpc(v) for v in values))


class AverageTest(SimpleTestCase):
    def test_fixed_point(self):
        mu = AtomicMeasure((Fraction(0),), (Fraction(1),))
        f = observable(3 + 1j)
        for N in (1, 5, 40):
            self.assertEqual(CircleService.ergodic_avg(f, mu, N).values[0], mpmath.mpc(3, 1))

    def test_cancellation(self):
        mu = AtomicMeasure((Fraction(1, 2),), (Fraction(1),))
        for N in (2, 10, 64):
            self.assertLess(abs(CircleService.ergodic_avg(observable(1), mu, N).values[0]), mpmath.mpf("1e-70"))
        self.assertAlmostEqual(complex(CircleService.ergodic_avg(observable(1), mu, 3).values[0]), -1 / 3)

    def test_closed_form_matches_direct_summation(self):
        rng = np.random.default_rng(3)
        for _ in range(5):
            mu, f = CircleService.random_case(rng, 10)
            for N in (1, 7, 30):
                closed = CircleService.ergodic_avg(f, mu, N)
                direct = CircleService.ergodic_avg_direct(f, mu, N)
                for a, b in zip(closed.values, direct.values):
                    self.assertLess(abs(a - b), mpmath.mpf("1e-60"))

    def test_dimension_mismatch(self):
        mu = AtomicMeasure((Fraction(0), Fraction(1, 3)), (Fraction(1, 2), Fraction(1, 2)))
        with self.assertRaises(ValidationError):
            CircleService.ergodic_avg(observable(1), mu, 3)


class MeasureTest(SimpleTestCase):
    def test_invalid(self):
        for angles, weights in (
            ((Fraction(0),), (Fraction(1, 2),)),
            ((Fraction(1),), (Fraction(1),)),
            ((Fraction(0), Fraction(0)), (Fraction(1, 2), Fraction(1, 2))),
            ((Fraction(0),), (Fraction(1), Fraction(0))),
        ):
            with self.assertRaises(ValidationError):
                AtomicMeasure(angles, weights)

    def test_norms(self):
        mu = AtomicMeasure((Fraction(0), Fraction(1, 4)), (Fraction(1, 4), Fraction(3, 4)))
        f = observable(2, 2j)
        self.assertEqual(CircleService.norm2(f, mu), 2)
        self.assertEqual(CircleService.sup_norm(f), 2)


class RegionsTest(SimpleTestCase):
    def test_one_is_structured(self):
        for M in (1, 10, 1000):
            self.assertEqual(CircleService.region_of(EPSILON, DOUBLE, M, Fraction(0)), REGION_A)

    def test_radii(self):
        regions = CircleService.regions(EPSILON, DOUBLE, 10)
        self.assertEqual(regions.a_radius, Fraction(1, 240))
        self.assertEqual(regions.b_radius, Fraction(12, 5))
        # хорда не превосходит 2 < 12/5, поэтому B_10 пусто
        self.assertEqual(CircleService.region_of(EPSILON, DOUBLE, 10, Fraction(1, 2)), REGION_E)

    def test_labels(self):
        self.assertEqual(CircleService.region_of(EPSILON, DOUBLE, 100, Fraction(1, 2)), REGION_B)
        self.assertEqual(CircleService.region_of(EPSILON, DOUBLE, 100, Fraction(1, 1000)), REGION_E)
        self.assertEqual(CircleService.region_of(EPSILON, DOUBLE, 100, Fraction(1, 100000)), REGION_A)
        self.assertEqual(CircleService.region_of(EPSILON, DOUBLE, 100, Fraction(-1, 100000)), REGION_A)

    def test_partition(self):
        rng = np.random.default_rng(11)
        regions = CircleService.regions(EPSILON, DOUBLE, 100)
        with precision():
            for _ in range(1000):
                denominator = int(rng.integers(1, 10 ** 7))
                theta = Fraction(int(rng.integers(0, denominator)), denominator)
                chord = CircleService.chord(theta)
                in_a = CircleService.compare_chord(chord, regions.a_radius) < 0
                in_b = CircleService.compare_chord(chord, regions.b_radius) >= 0
                self.assertFalse(in_a and in_b)
                label = CircleService.classify(regions, chord)
                self.assertEqual(label == REGION_A, in_a)
                self.assertEqual(label == REGION_B, in_b)
                self.assertEqual(label == REGION_E, not in_a and not in_b)

    def test_overlapping_discs(self):
        with self.assertRaises(ValidationError):
            CircleService.regions(Fraction(10), GrowthService.identity(), 1)

    def test_exact_and_ambiguous_comparisons(self):
        with precision():
            self.assertEqual(CircleService.compare_chord(CircleService.chord(Fraction(1, 2)), Fraction(2)), 0)
            self.assertEqual(CircleService.compare_chord(CircleService.chord(Fraction(1, 6)), Fraction(1)), 0)
            self.assertEqual(CircleService.compare_chord(CircleService.chord(Fraction(1, 4)), Fraction(3, 2)), -1)
            with self.assertRaises(PrecisionAmbiguityError):
                CircleService.compare_chord((None, to_mpf(Fraction(1, 7))), Fraction(1, 7))


class SequenceTest(SimpleTestCase):
    def test_example(self):
        sequence = CircleService.vn_sequence(EPSILON, DOUBLE, 10)
        self.assertEqual(CircleService.pigeonhole_count(EPSILON), 145)
        self.assertEqual(len(sequence), 145)
        self.assertEqual(sequence[:2], (10, 5761))

    def test_minimality(self):
        sequence = CircleService.vn_sequence(EPSILON, DOUBLE, 10)
        for current, following in zip(sequence[:10], sequence[1:11]):
            self.assertLess(Fraction(12) / (EPSILON * following), EPSILON / (6 * DOUBLE(current)))
            self.assertGreaterEqual(Fraction(12) / (EPSILON * (following - 1)), EPSILON / (6 * DOUBLE(current)))

    def test_disjoint_e_regions(self):
        sequence = CircleService.vn_sequence(EPSILON, DOUBLE, 10)
        table = [CircleService.regions(EPSILON, DOUBLE, M) for M in sequence]
        for i in range(len(table)):
            for j in range(i + 1, len(table)):
                self.assertLess(table[j].b_radius, table[i].a_radius)


class DecompositionTest(SimpleTestCase):
    def test_mass_at_one(self):
        mu = AtomicMeasure((Fraction(0), Fraction(1, 3)), (Fraction(1, 2), Fraction(1, 2)))
        f = observable(1, 0)
        decomposition = CircleService.pigeonhole_decompose(f, mu, EPSILON, DOUBLE, 10)
        self.assertEqual(decomposition.i, 1)
        self.assertEqual(decomposition.sigma, f)
        self.assertEqual(decomposition.u, observable(0, 0))
        self.assertEqual(decomposition.v, observable(0, 0))

    def test_random_contract(self):
        rng = np.random.default_rng(5)
        sequence = CircleService.vn_sequence(EPSILON, DOUBLE, 10)
        for _ in range(100):
            mu, f = CircleService.random_case(rng)
            d = CircleService.pigeonhole_decompose(f, mu, EPSILON, DOUBLE, sequence=sequence)
            with precision():
                self.assertEqual(d.sigma + d.u + d.v, f)
            self.assertLess(d.v_norm, to_mpf(EPSILON / 6))
            self.assertLessEqual(d.v_norm, 1 / mpmath.sqrt(len(sequence)))
            self.assertEqual(d.M, sequence[d.i - 1])

    def test_norm_precondition(self):
        mu = AtomicMeasure((Fraction(1, 3),), (Fraction(1),))
        with self.assertRaises(ValidationError):
            CircleService.pigeonhole_decompose(observable(2), mu, EPSILON, DOUBLE, 10)


class MetastabilityTest(SimpleTestCase):
    def test_fixed_function(self):
        mu = AtomicMeasure((Fraction(0), Fraction(2, 5)), (Fraction(1, 3), Fraction(2, 3)))
        f = observable(1, 0)
        sequence = CircleService.vn_sequence(EPSILON, DOUBLE, 10)
        report = CircleService.check_metastability(f, mu, EPSILON, 1, DOUBLE, sequence)
        self.assertEqual(report.method, "exhaustive")
        self.assertEqual(report.max_oscillation, 0)
        self.assertTrue(report.passed)

    def test_support_in_b(self):
        mu = AtomicMeasure((Fraction(1, 2),), (Fraction(1),))
        self.assertEqual(CircleService.region_of(EPSILON, DOUBLE, 100, Fraction(1, 2)), REGION_B)
        for N in range(100, 201):
            self.assertLessEqual(CircleService.norm2(CircleService.ergodic_avg(observable(1), mu, N), mu), to_mpf(EPSILON / 6))

    def test_envelope_for_wide_windows(self):
        rng = np.random.default_rng(9)
        sequence = CircleService.vn_sequence(EPSILON, DOUBLE, 10)
        mu, f = CircleService.random_case(rng)
        report = CircleService.check_metastability(f, mu, EPSILON, 2, DOUBLE, sequence)
        self.assertEqual(report.method, "envelope")
        with self.assertRaises(ValidationError):
            CircleService.check_metastability(f, mu, EPSILON, 0, DOUBLE, sequence)

    def test_envelope_dominates_exhaustive(self):
        rng = np.random.default_rng(13)
        sequence = (10, 11)
        for _ in range(10):
            mu, f = CircleService.random_case(rng, 8)
            exhaustive = CircleService.check_metastability(f, mu, EPSILON, 1, DOUBLE, sequence)
            with precision():
                envelope = CircleService._oscillation_envelope(f, mu, 10, 20)
            self.assertLessEqual(exhaustive.max_oscillation, envelope)

    def test_sweep(self):
        report = CircleService.vn_sweep(EPSILON, DOUBLE, 10, 1000, seed=2024)
        self.assertEqual(report.sequence, CircleService.vn_sequence(EPSILON, DOUBLE, 10))
        self.assertEqual(len(report.rows), 1000)
        self.assertTrue(report.all_passed)
        self.assertTrue(all(1 <= row.i <= 145 for row in report.rows))
        self.assertEqual(report.summary()["passed"], 1000)

    def test_sweep_is_deterministic(self):
        first = CircleService.vn_sweep(EPSILON, DOUBLE, 10, 20, seed=1)
        second = CircleService.vn_sweep(EPSILON, DOUBLE, 10, 20, seed=1)
        self.assertEqual([row.to_row() for row in first.rows], [row.to_row() for row in second.rows])


class StabilityTest(SimpleTestCase):
    def setUp(self):
        self.mu = AtomicMeasure((Fraction(1, 10000), Fraction(1, 2000), Fraction(1, 4)),
                                (Fraction(1, 3), Fraction(1, 3), Fraction(1, 3)))
        self.f = observable(1, 0.5, 0)

    def test_bound(self):
        for n in range(1, 21):
            report = CircleService.support_stability_bound(self.f, self.mu, EPSILON, DOUBLE, 10, n)
            self.assertTrue(report.passed)
            self.assertLessEqual(report.bound, to_mpf(EPSILON / 6))

    def test_preconditions(self):
        with self.assertRaises(ValidationError):
            CircleService.support_stability_bound(self.f, self.mu, EPSILON, DOUBLE, 10, 21)
        with self.assertRaises(ValidationError):
            CircleService.support_stability_bound(observable(1, 0, 1), self.mu, EPSILON, DOUBLE, 10, 1)


class SerializersTest(SimpleTestCase):
    def test_sweep(self):
        serializer = VnSweepSerializer(data={"epsilon": "1/2", "growth": "2*M", "m0": 10, "cases": 5})
        self.assertTrue(serializer.is_valid(), serializer.errors)
        self.assertEqual(serializer.validated_data["seed"], 0)
        self.assertFalse(VnSweepSerializer(data={"epsilon": "3", "growth": "M"}).is_valid())

    def test_case(self):
        data = {
            "epsilon": "1/2",
            "growth": "2*M",
            "measure": {"angles": ["0", "1/3"], "weights": ["1/2", "1/2"]},
            "f": [["1", "0"], ["0", "0.5"]],
        }
        serializer = VnCaseSerializer(data=data)
        self.assertTrue(serializer.is_valid(), serializer.errors)
        self.assertEqual(serializer.validated_data["f"].values[1], mpmath.mpc(0, 0.5))
        data["f"] = [["1", "0"]]
        self.assertFalse(VnCaseSerializer(data=data).is_valid())
        data["f"] = [["1", "x"], ["0", "0"]]
        self.assertFalse(VnCaseSerializer(data=data).is_valid())
