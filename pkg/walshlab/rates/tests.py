from fractions import Fraction

import mpmath
import numpy as np
from django.core.exceptions import ValidationError
from django.test import SimpleTestCase
from hypothesis import given, settings as hypothesis_settings, strategies as st

from folner.services import FolnerService
from polymap.models import GroupModel
from rates.deferred import Ceiling, Const, LeastPower, Power
from rates.models import RateProfile, ladder_values
from rates.serializers import RatesSerializer
from rates.services import GrowthService, RateService, TupleRecursion, TupleService
from utils.exceptions import ResourceCapExceeded

TOY = RateProfile(ladder_length=2)


def literal_c_sequence(epsilon, length):
    sequence = [Fraction(1)]
    for _ in range(length - 1):
        C = sequence[-1]
        sequence.append(max(C, 2 / (Fraction(epsilon) ** 2 / (216 * C))))
    return sequence[::-1]


class ConstantsTest(SimpleTestCase):
    def test_delta_and_eta(self):
        self.assertEqual(RateService.delta(Fraction(1, 2)), Fraction(1, 72))
        self.assertEqual(RateService.eta(Fraction(1, 2), 1), Fraction(1, 864))
        self.assertEqual(RateService.eta(Fraction(1, 3), 14), RateService.eta(Fraction(1, 3), 7) / 2)
        with self.assertRaises(ValidationError):
            RateService.eta(Fraction(1, 2), 0)

    def test_c_sequence_is_geometric(self):
        sequence = RateService.c_sequence(Fraction(6))
        self.assertEqual(len(sequence), 72)
        self.assertEqual(sequence[-1], 1)
        self.assertEqual(sequence[0], 12 ** 71)
        self.assertTrue(all(sequence[i] == 12 * sequence[i + 1] for i in range(71)))

    def test_c_sequence_matches_literal_recursion(self):
        for epsilon in (Fraction(6), Fraction(12), Fraction(21), Fraction(30), Fraction(25, 2)):
            length = RateService.ladder_length(epsilon)
            sequence = RateService.c_sequence(epsilon)
            self.assertEqual(sequence, literal_c_sequence(epsilon, length))
            self.assertEqual(RateService.c_star(epsilon), sequence[0])

    def test_c_sequence_invariants(self):
        epsilon = Fraction(12)
        sequence = RateService.c_sequence(epsilon)
        self.assertEqual(RateService.c_star(epsilon), 3 ** 17)
        for i in range(1, len(sequence)):
            self.assertGreaterEqual(sequence[i - 1], sequence[i])
            self.assertGreaterEqual(sequence[i], 1)
            self.assertGreaterEqual(sequence[i - 1] * RateService.eta(epsilon, sequence[i]), 2)

    def test_large_epsilon_gives_unit_ladder(self):
        self.assertEqual(RateService.c_star(Fraction(21)), 1)
        self.assertEqual(RateService.gamma_iter(Fraction(21), 1), Fraction(7, 8))

    def test_gamma(self):
        self.assertEqual(RateService.gamma_iter(Fraction(6), 1), Fraction(1, 4 * 12 ** 71))
        self.assertEqual(RateService.gamma_iter(Fraction(6), 0), 6)
        self.assertEqual(RateService.gamma_node(Fraction(6), 1).exact(1 << 20), Fraction(1, 4 * 12 ** 71))

    def test_gamma_decreases(self):
        for epsilon, depth in ((Fraction(21), 2), (Fraction(6), 1), (Fraction(12), 1)):
            values = [RateService.gamma_iter(epsilon, c) for c in range(depth + 1)]
            self.assertTrue(all(values[c + 1] < values[c] for c in range(depth)))

    def test_second_gamma_is_deferred(self):
        with self.assertRaises(ResourceCapExceeded):
            RateService.gamma_iter(Fraction(6), 2)
        node = RateService.gamma_node(Fraction(6), 2)
        self.assertLess(node.log10, -10 ** 150)
        self.assertIsNone(node.digits())

    def test_bundle(self):
        bundle = RateService.bundle(Fraction(6), 1)
        report = bundle.to_dict()
        self.assertEqual(report["c_star"], str(12 ** 71))
        self.assertEqual(report["ladder_length"], 72)
        self.assertEqual(bundle.eta(Fraction(1)), Fraction(1, 6))
        self.assertTrue(report["conforming"])

    def test_toy_profile(self):
        self.assertFalse(TOY.conforming)
        self.assertEqual(RateService.c_sequence(Fraction(6), TOY), [12, 1])
        self.assertEqual(RateService.gamma_one(Fraction(6), TOY), Fraction(1, 48))
        self.assertEqual(RateService.ladder_length(Fraction(1, 2), RateProfile(delta=Fraction(1, 2))), 8)
        with self.assertRaises(ValidationError):
            RateProfile(ladder_length=0)


class RMinTest(SimpleTestCase):
    def test_examples(self):
        self.assertEqual(RateService.r_min(1, Fraction(1, 2)), 1)
        self.assertEqual(RateService.r_min(2, Fraction(1, 8)), 4)
        self.assertEqual(RateService.r_min(2, Fraction(1, 48)), 6)

    @hypothesis_settings(deadline=None)
    @given(st.integers(1, 40), st.fractions(min_value=Fraction(1, 1000), max_value=Fraction(999, 1000)))
    def test_definition_and_minimality(self, K, gamma):
        r = RateService.r_min(K, gamma)
        q = Fraction(K - 1, K)
        self.assertLess(q ** r, gamma)
        if r > 1:
            self.assertGreaterEqual(q ** (r - 1), gamma)

    def test_invalid(self):
        for K, gamma in ((0, Fraction(1, 2)), (2, Fraction(1)), (2, Fraction(0))):
            with self.assertRaises(ValidationError):
                RateService.r_min(K, gamma)


class GrowthTest(SimpleTestCase):
    def test_parse(self):
        self.assertEqual(GrowthService.parse("2*M")(5), 10)
        self.assertEqual(GrowthService.parse("M^2 @ M+1")(2), 9)
        self.assertEqual(GrowthService.parse("max(M, 10)")(3), 10)
        self.assertEqual(GrowthService.parse("M**3 + 2")(10 ** 20), 10 ** 60 + 2)

    def test_compose_and_identity_floor(self):
        double = GrowthService.parse("2*M")
        square = GrowthService.parse("M^2")
        self.assertEqual(GrowthService.compose(double, square)(3), 18)
        self.assertEqual(GrowthService.at_least_identity(GrowthService.parse("3"))(7), 7)
        self.assertEqual(GrowthService.identity()(11), 11)

    def test_rejects(self):
        for text in ("M/2", "x + 1", "M^(-1)", "", "2*M @", "1.5*M", "__import__('os')", "M +* 2"):
            with self.assertRaises(ValidationError):
                GrowthService.parse(text)
        with self.assertRaises(ValidationError):
            GrowthService.parse("M - 10")(0)

    def test_nondecreasing(self):
        GrowthService.check_nondecreasing(GrowthService.parse("M^2 + 1"))
        with self.assertRaises(ValidationError):
            GrowthService.check_nondecreasing(GrowthService.parse("max(10 - M, 0)"))

    def test_phi_handle(self):
        phi, conditional = GrowthService.phi_handle()
        self.assertFalse(conditional)
        self.assertEqual(phi(Fraction(1, 48), 2), 97)
        _, conditional = GrowthService.phi_handle(GroupModel.heis())
        self.assertTrue(conditional)
        phi, conditional = GrowthService.phi_handle(growth=GrowthService.parse("M + 1"))
        self.assertEqual(phi(Fraction(1, 2), 4), 5)
        self.assertFalse(conditional)


class StructureSequenceTest(SimpleTestCase):
    def test_identity(self):
        identity = GrowthService.identity()
        steps = RateService.structure_sequence(Fraction(1), identity, identity, 7, RateProfile(ladder_length=5))
        self.assertEqual(ladder_values(steps), [7] * 5)

    def test_doubling(self):
        steps = RateService.structure_sequence(
            Fraction(1), GrowthService.identity(), GrowthService.parse("2*M"), 1, RateProfile(ladder_length=6)
        )
        self.assertEqual(ladder_values(steps), [1, 2, 4, 8, 16, 32])

    def test_conforming_length(self):
        identity = GrowthService.identity()
        self.assertEqual(len(RateService.structure_sequence(Fraction(6), identity, identity, 1)), 72)

    def test_monotone(self):
        rng = np.random.default_rng(7)
        profile = RateProfile(ladder_length=6)
        for _ in range(20):
            a, b, c, d = (int(x) for x in rng.integers(0, 4, size=4))
            omega = GrowthService.parse(f"{a}*M + {b}")
            psi = GrowthService.parse(f"{c}*M^2 + {d}")
            steps = RateService.structure_sequence(Fraction(1, 3), omega, psi, int(rng.integers(0, 10)), profile)
            for step, following in zip(steps, steps[1:]):
                self.assertEqual(step.B, following.A)
                self.assertLessEqual(step.M, following.M)
            for step in steps:
                self.assertLessEqual(step.A, step.M)
                self.assertLessEqual(step.M, step.B)


class DeferredTest(SimpleTestCase):
    def test_exact_arithmetic(self):
        self.assertEqual(Power(Const(Fraction(3)), Const(Fraction(4))).exact(64), 81)
        self.assertEqual((Const(Fraction(1)) + 1).exact(64), 2)
        self.assertEqual((Const(Fraction(7, 2)) / 7).exact(64), Fraction(1, 2))
        self.assertEqual(Ceiling(Const(Fraction(7, 2))).exact(64), 4)

    def test_cap(self):
        node = Power(Const(Fraction(2)), Const(Fraction(100)))
        with self.assertRaises(ResourceCapExceeded):
            node.exact(16)
        self.assertAlmostEqual(float(node.log10), 100 * 0.30102999566, places=6)
        self.assertEqual(node.digits(), 31)

    def test_log_estimates(self):
        self.assertAlmostEqual(float((Const(Fraction(1)) + 1).log10), 0.30103, places=4)
        self.assertEqual(Ceiling(Const(Fraction(1, 3))).log10, 0)
        node = LeastPower(Const(Fraction(2)), Const(Fraction(1, 48)))
        self.assertEqual(node.exact(64), 6)
        self.assertLessEqual(abs(float(node.magnitude()) - 6), 1)

    def test_describe(self):
        node = Power(Const(Fraction(12)), Const(Fraction(71)))
        report = node.describe(1 << 20)
        self.assertEqual(report["value"], str(12 ** 71))
        self.assertEqual(report["digits"], len(str(12 ** 71)))
        self.assertNotIn("value", node.describe(64))

    def test_positive_only(self):
        with self.assertRaises(ValueError):
            Const(Fraction(0))


class CountTest(SimpleTestCase):
    def test_base_and_first_level(self):
        self.assertEqual(TupleService.count(0, Fraction(1, 2)), 1)
        self.assertEqual(TupleService.count(1, Fraction(6)), 72)
        self.assertEqual(TupleService.count(1, Fraction(1, 2)), 10368)

    def test_toy_counts(self):
        epsilon = Fraction(6)
        self.assertEqual(TupleService.count(1, epsilon, TOY), 2)
        self.assertEqual(TupleService.prop_count(1, epsilon, TOY), 64)
        self.assertEqual(TupleService.count(2, epsilon, TOY), 128)
        counts = [TupleService.count(c, epsilon, TOY) for c in range(3)]
        self.assertEqual(counts, sorted(counts))

    def test_count_nodes_agree(self):
        for c in range(3):
            node = TupleService.count_node(c, Fraction(6), TOY)
            self.assertEqual(node.exact(1 << 20), TupleService.count(c, Fraction(6), TOY))


class TupleTest(SimpleTestCase):
    def setUp(self):
        self.F = GrowthService.identity()
        self.epsilon = Fraction(6)

    def test_base_case(self):
        result = TupleService.main_tuple(0, self.epsilon, self.F, 5)
        self.assertEqual(result.count, 1)
        self.assertEqual(result.entries, (5,))
        self.assertIsNone(result.N)
        self.assertEqual(result.status, "Exact")

    def test_first_level_reproduces_ladder(self):
        result = TupleService.main_tuple(1, self.epsilon, self.F, 2, profile=TOY)
        gamma = Fraction(1, 48)
        psi = GrowthService.parse("96*M - 95")
        oracle = RateService.structure_sequence(self.epsilon, GrowthService.identity(), psi, 2, TOY)
        self.assertEqual(result.entries, tuple(ladder_values(oracle)))
        self.assertEqual(result.entries, (2, 97))
        self.assertEqual(result.N, FolnerService.phi_closed_form(gamma, 97))
        self.assertEqual(result.N, 9217)

    def test_proposition_base(self):
        result = TupleService.prop_tuple(0, self.epsilon, GrowthService.parse("3*M"), 4, profile=TOY)
        self.assertEqual(result.entries, (4,))
        self.assertEqual(result.N, FolnerService.phi_closed_form(Fraction(1, 48), 12))

    def test_second_level_structure(self):
        M = 1
        result = TupleService.main_tuple(2, self.epsilon, self.F, M, profile=TOY)
        self.assertEqual(result.count, 128)
        self.assertEqual(len(result.entries), 128)
        self.assertEqual(result.entries[0], M)
        self.assertTrue(all(entry >= M for entry in result.entries))
        self.assertGreaterEqual(result.N, max(result.entries[:64]))

    def test_index_chain_and_levels(self):
        recursion = TupleRecursion(FolnerService.phi_closed_form, TOY)
        gamma = Fraction(1, 48)
        levels = [recursion.level(1, self.epsilon, self.F, s) for s in range(1, 7)]
        self.assertIs(levels[-1], self.F)
        for m in (1, 2, 3):
            values = [level(m) for level in levels]
            self.assertEqual(values, sorted(values, reverse=True))

        # M~ <= M~^(i1) <= ... <= M~^(i1..ir)
        for index in (0, 21, 63):
            chain, value = [3], 3
            digits = [(index >> (5 - s)) & 1 for s in range(6)]
            for s, digit in enumerate(digits, start=1):
                value = recursion.theorem_entry(1, gamma, recursion.level(1, self.epsilon, self.F, s), value, digit)
                chain.append(value)
            self.assertEqual(chain, sorted(chain))
            self.assertEqual(value, recursion.prop_entry(1, self.epsilon, self.F, 3, index))

    def test_deferred_mode(self):
        result = TupleService.main_tuple(1, self.epsilon, self.F, 1, mode="deferred")
        self.assertEqual(result.count, 72)
        self.assertIsNone(result.entries)
        self.assertEqual(result.status, "Deferred")
        self.assertEqual(result.to_dict()["deferred"], {"digits": 2})

    def test_realistic_count_is_deferred(self):
        result = TupleService.main_tuple(2, Fraction(1, 2), self.F, 1)
        self.assertIsNone(result.count)
        self.assertEqual(result.status, "Deferred")
        self.assertIsNone(result.deferred["digits"])
        self.assertGreater(mpmath.mpf(result.deferred["log10"]), 10 ** 6)

    def test_invalid(self):
        with self.assertRaises(ValidationError):
            TupleService.main_tuple(-1, self.epsilon, self.F, 1)
        with self.assertRaises(ValidationError):
            TupleService.main_tuple(1, self.epsilon, self.F, 1, mode="lazy")


class RatesSerializerTest(SimpleTestCase):
    def test_valid(self):
        serializer = RatesSerializer(data={"epsilon": "6", "complexity": 1, "growth": "2*M", "ladder_override": 2})
        self.assertTrue(serializer.is_valid(), serializer.errors)
        self.assertEqual(serializer.validated_data["profile"], TOY)
        self.assertEqual(serializer.validated_data["growth"](4), 8)
        self.assertEqual(serializer.validated_data["mode"], "exact")

    def test_invalid(self):
        for data in (
            {"epsilon": "0", "complexity": 1, "growth": "M"},
            {"epsilon": "1/2", "complexity": 1, "growth": "M/2"},
            {"epsilon": "1/2", "complexity": 1, "growth": "max(5 - M, 0)"},
            {"epsilon": "1/2", "complexity": 1, "growth": "M", "unknown": 1},
        ):
            self.assertFalse(RatesSerializer(data=data).is_valid())
