from itertools import product

import numpy as np
from django.core.exceptions import ValidationError
from django.test import SimpleTestCase

from nilgroup.models import Prefiltration
from nilgroup.services import GroupService, PrefiltrationService
from polymap.models import Certified, GroupModel, Inconclusive
from polymap.services import PolyMapService, PolynomialityService, RandomMapService
from systems.models import ComplexityCertificate, System
from systems.serializers import AntihomSystemSerializer, SystemSerializer
from systems.services import ComplexityBoundService, SystemService
from utils.exceptions import BoundOverflowError

E = GroupService.elementary
Z1 = GroupModel.zr(1)
Z2 = GroupModel.zr(2)
HEIS = GroupModel.heis()
ARITY = 64


def oracle_bound(d, j):
    if d is None:
        return 0
    if j > ARITY:
        raise BoundOverflowError("arity")
    return oracle_cprime(d, j, (1,) * j, 0)


def oracle_cprime(d, j, sizes, c_j):
    """
    Прямое раскрытие рекурсии без накопления удвоений
    """
    if j == 0:
        return c_j
    if c_j == 0:
        lower = None if d == 0 else d - 1
        doubled = tuple(2 * s for s in sizes[:-1])
        return oracle_cprime(d, j - 1, doubled, oracle_bound(lower, 2 * sizes[-1])) + 1
    return oracle_cprime(d, j, tuple(2 * s for s in sizes), c_j - 1) + 1


def homomorphism(model=Z1, dim=3):
    if model == HEIS:
        return PolyMapService.heisenberg_embedding()
    h = GroupService.mul(E(dim, 1, 2, 1), E(dim, 2, 3, 1))
    return PolyMapService.homomorphism(model, [GroupService.power(h, k + 1) for k in range(model.rank)])


def linear(model, dim, i, j, rng):
    coefficients = [int(c) for c in rng.integers(1, 4, size=model.arity)]
    polynomial = sum(c * x for c, x in zip(coefficients, PolyMapService.variables(model))) + int(rng.integers(-3, 4))
    return PolyMapService.one_parameter(model, dim, i, j, polynomial)


def certified_bound(result):
    assert isinstance(result, ComplexityCertificate), result
    return result.bound


class ReductionTest(SimpleTestCase):
    def setUp(self):
        self.rng = np.random.default_rng(5150)

    def test_pair_with_itself(self):
        g = RandomMapService.random_polynomial_map(self.rng, HEIS, 3, 1)
        self.assertTrue(PolyMapService.equal(SystemService.reduction_pair(g, g, "a", "b"), g))

    def test_pair_with_identity_for_homomorphism(self):
        g = homomorphism()
        pair = SystemService.reduction_pair(g, PolyMapService.identity(Z1, 3), "a", "b")
        self.assertTrue(PolyMapService.is_constant(pair))
        _, a, b = PolyMapService.ring_for(Z1, ("a", "b")).gens
        expected = PolyMapService.at(PolyMapService.coerce(g, ("a", "b")), (-(a + b),))
        self.assertTrue(PolyMapService.equal(pair, expected))

    def test_left_factor_identity(self):
        for _ in range(5):
            g_j, h, h_prime = (RandomMapService.random_polynomial_map(self.rng, HEIS, 3, 1) for _ in range(3))
            left = SystemService.reduction_pair(
                PolyMapService.pointwise_mul(g_j, h), PolyMapService.pointwise_mul(g_j, h_prime), "a", "b"
            )
            right = PolyMapService.pointwise_mul(g_j, SystemService.reduction_pair(h, h_prime, "a", "b"))
            self.assertTrue(PolyMapService.equal(left, right))

    def test_mixed_factor_is_lower_polynomial(self):
        gb = PrefiltrationService.lcs(3)
        upper = PrefiltrationService.shift(gb, 1)
        for model in (Z1, HEIS):
            g_i = RandomMapService.random_polynomial_map(self.rng, model, 3, 1)
            g_j = RandomMapService.random_polynomial_map(self.rng, model, 3, 1)
            h = linear(model, 3, 1, 3, self.rng)
            h_prime = linear(model, 3, 1, 3, self.rng)
            self.assertIsInstance(PolynomialityService.is_polynomial(h, upper), Certified)
            pair = SystemService.reduction_pair(
                PolyMapService.pointwise_mul(g_j, h), PolyMapService.pointwise_mul(g_i, h_prime), "a", "b"
            )
            remainder = PolyMapService.pointwise_mul(PolyMapService.pointwise_inv(g_i), pair)
            self.assertIsInstance(PolynomialityService.is_polynomial(remainder, upper), Certified)

    def test_reduce_shape(self):
        maps = [RandomMapService.random_polynomial_map(self.rng, Z2, 3, 1) for _ in range(3)]
        system = SystemService.build(maps)
        reduced = SystemService.reduce(system, "a", "b")
        self.assertEqual(len(reduced.maps), 2 * system.j)
        for original, kept in zip(system.maps[:-1], reduced.maps):
            self.assertTrue(PolyMapService.equal(original, kept))

    def test_reduce_homomorphism_system(self):
        system = SystemService.build([homomorphism()])
        reduced = SystemService.reduce(system, None, "b")
        self.assertEqual(reduced.j, 1)
        self.assertTrue(PolyMapService.is_constant(reduced.maps[1]))

    def test_reduce_trivial(self):
        with self.assertRaises(ValidationError):
            SystemService.reduce(System((PolyMapService.identity(Z1, 3),)), "a", "b")

    def test_right_reduce_definition(self):
        system = SystemService.build([RandomMapService.random_polynomial_map(self.rng, HEIS, 3, 1)])
        self.assertEqual(
            SystemService.right_reduce(system, "b").describe(),
            SystemService.reduce(system, None, "b").describe(),
        )

    def test_build_requires_identity(self):
        with self.assertRaises(ValidationError):
            SystemService.build([homomorphism()], with_identity=False)


class CheatingTest(SimpleTestCase):
    def setUp(self):
        self.rng = np.random.default_rng(31337)

    def random_constant(self, dim=3):
        return PrefiltrationService.random_element(self.rng, dim, 1, 3)

    def random_system(self, model):
        j = int(self.rng.integers(1, 4))
        return SystemService.build([RandomMapService.random_polynomial_map(self.rng, model, 3, 1) for _ in range(j)])

    def test_example_normal_form(self):
        (n,) = PolyMapService.variables(Z1)
        g1 = homomorphism()
        g2 = PolyMapService.one_parameter(Z1, 3, 1, 3, n ** 2)
        c = PolyMapService.constant(Z1, self.random_constant())
        c_prime = PolyMapService.constant(Z1, self.random_constant())
        messy = SystemService.build([g2, PolyMapService.pointwise_mul(g1, c), g1, c_prime])
        clean = SystemService.build([g1, g2])
        normal = SystemService.cheat_normalize(messy)
        self.assertEqual(normal.j, 2)
        self.assertEqual(normal.describe(), SystemService.cheat_normalize(clean).describe())

    def test_trivial_system(self):
        trivial = System((PolyMapService.identity(Z1, 3),))
        self.assertTrue(SystemService.cheat_normalize(trivial).is_trivial)

    def test_idempotent(self):
        for k in range(100):
            system = self.random_system((Z1, Z2, HEIS)[k % 3])
            once = SystemService.cheat_normalize(system)
            self.assertEqual(SystemService.cheat_normalize(once).describe(), once.describe())

    def test_single_steps_are_transitive(self):
        for k in range(50):
            model = (Z1, HEIS)[k % 2]
            base = self.random_system(model)
            maps = list(base.maps[1:])
            for _ in range(int(self.rng.integers(1, 6))):
                step = int(self.rng.integers(0, 4))
                if step == 0:
                    maps.append(PolyMapService.constant(model, self.random_constant()))
                elif step == 1:
                    index = int(self.rng.integers(0, len(maps)))
                    constant = PolyMapService.constant(model, self.random_constant())
                    maps[index] = PolyMapService.pointwise_mul(maps[index], constant)
                elif step == 2:
                    maps.append(maps[int(self.rng.integers(0, len(maps)))])
                else:
                    maps = [maps[i] for i in self.rng.permutation(len(maps))]
            self.assertEqual(
                SystemService.cheat_normalize(SystemService.build(maps)).describe(),
                SystemService.cheat_normalize(base).describe(),
            )


class CertificationTest(SimpleTestCase):
    def setUp(self):
        self.rng = np.random.default_rng(2718)

    def test_trivial_system(self):
        result = SystemService.certify_complexity(System((PolyMapService.identity(Z1, 3),)), 0)
        self.assertEqual(certified_bound(result), 0)

    def test_homomorphisms(self):
        for model in (Z1, Z2):
            system = SystemService.build([homomorphism(model)])
            self.assertEqual(certified_bound(SystemService.certify_complexity(system, 5)), 1)

    def test_heisenberg_embedding(self):
        system = SystemService.build([homomorphism(HEIS)])
        self.assertEqual(certified_bound(SystemService.certify_right_complexity(system, 5)), 1)
        bound = ComplexityBoundService.complexity_bound(2, 1)
        self.assertLessEqual(certified_bound(SystemService.certify_complexity(system, bound)), bound)

    def test_linear_center_map(self):
        (n,) = PolyMapService.variables(Z1)
        system = SystemService.build([PolyMapService.one_parameter(Z1, 3, 1, 3, n)])
        bound = certified_bound(SystemService.certify_complexity(system, 5))
        self.assertLessEqual(bound, ComplexityBoundService.complexity_bound(2, 1))
        self.assertEqual(bound, 1)

    def test_square_map(self):
        (n,) = PolyMapService.variables(Z1)
        system = SystemService.build([PolyMapService.one_parameter(Z1, 3, 1, 3, n ** 2)])
        result = SystemService.certify_complexity(system, 5)
        self.assertEqual(certified_bound(result), 2)
        tree = result.to_tree()
        self.assertEqual(tree["bound"], 2)
        self.assertIn("child", tree["tree"])

    def test_budget_exhausted(self):
        (n,) = PolyMapService.variables(Z1)
        system = SystemService.build([PolyMapService.one_parameter(Z1, 3, 1, 3, n ** 2)])
        self.assertIsInstance(SystemService.certify_complexity(system, 1), Inconclusive)

    def test_polynomial_corpus_within_bound(self):
        center = Prefiltration(3, (1, 2))
        for k in range(30):
            family = k % 3
            if family == 0:
                model = (Z1, Z2)[k % 2]
                j = 1 + k % 2
                maps = [linear(model, 2, 1, 2, self.rng) for _ in range(j)]
                d, gb = 1, PrefiltrationService.lcs(2)
            elif family == 1:
                model = (Z1, Z2, HEIS)[k % 3]
                j = 1 + (k // 3) % 3
                maps = [linear(model, 3, 1, 3, self.rng) for _ in range(j)]
                d, gb = 1, center
            else:
                model = (Z1, Z2, HEIS)[(k // 3) % 3]
                j = 1
                maps = [RandomMapService.random_polynomial_map(self.rng, model, 3, 1)]
                d, gb = 2, PrefiltrationService.lcs(3)
            for g in maps:
                self.assertIsInstance(PolynomialityService.is_polynomial(g, gb), Certified)
            bound = ComplexityBoundService.complexity_bound(d, j)
            budget = ComplexityBoundService.default_budget(d, j, 64)
            result = SystemService.certify_complexity(SystemService.build(maps), min(budget, 64))
            self.assertLessEqual(certified_bound(result), bound)

    def test_right_not_above_two_sided(self):
        for k in range(30):
            model = (Z1, Z2, HEIS)[k % 3]
            if model == HEIS:
                maps = [homomorphism(HEIS), linear(HEIS, 3, 1, 3, self.rng)][: 1 + k % 2]
            else:
                maps = [RandomMapService.random_polynomial_map(self.rng, model, 3, 1) for _ in range(1 + k % 2)]
            system = SystemService.build(maps)
            two_sided = SystemService.certify_complexity(system, 30)
            right = SystemService.certify_right_complexity(system, 30)
            if isinstance(two_sided, ComplexityCertificate) and isinstance(right, ComplexityCertificate):
                self.assertLessEqual(right.bound, two_sided.bound)
                self.assertTrue(right.right)


class AntihomomorphismSystemTest(SimpleTestCase):
    def fixtures(self, j):
        (n,) = PolyMapService.variables(Z1)
        return [PolyMapService.one_parameter(Z1, 4, 1, k, n) for k in range(2, 2 + j)]

    def test_right_complexity_at_most_j(self):
        for j in (1, 2, 3):
            system = SystemService.commuting_antihom_system(self.fixtures(j))
            self.assertEqual(system.j, j)
            self.assertLessEqual(certified_bound(SystemService.certify_right_complexity(system, j)), j)

    def test_single_right_reduction_is_constant(self):
        system = SystemService.commuting_antihom_system(self.fixtures(1))
        reduced = SystemService.right_reduce(system, "b")
        self.assertTrue(PolyMapService.is_constant(reduced.maps[1]))

    def test_cumulative_identity(self):
        system = SystemService.commuting_antihom_system(self.fixtures(3))
        last = system.maps[-1]
        for i in range(system.j):
            pair = SystemService.reduction_pair(last, system.maps[i], None, "b")
            factor = PolyMapService.pointwise_mul(PolyMapService.pointwise_inv(system.maps[i]), pair)
            self.assertTrue(PolyMapService.is_constant(factor))

    def test_heisenberg_antihomomorphism_pair(self):
        embedding = PolyMapService.heisenberg_embedding()
        g = PolyMapService.pointwise_inv(embedding)
        system = SystemService.commuting_antihom_system([g])
        self.assertLessEqual(certified_bound(SystemService.certify_right_complexity(system, 1)), 1)

    def test_rejects_noncommuting(self):
        (n,) = PolyMapService.variables(Z1)
        maps = [PolyMapService.one_parameter(Z1, 3, 1, 2, n), PolyMapService.one_parameter(Z1, 3, 2, 3, n)]
        with self.assertRaises(ValidationError):
            SystemService.commuting_antihom_system(maps)

    def test_rejects_homomorphism_of_heisenberg(self):
        with self.assertRaises(ValidationError):
            SystemService.commuting_antihom_system([PolyMapService.heisenberg_embedding()])

    def test_commuting_actions(self):
        system = SystemService.commuting_actions_system(self.fixtures(2))
        self.assertEqual(system.j, 2)
        self.assertLessEqual(certified_bound(SystemService.certify_right_complexity(system, 2)), 2)


class ComplexityBoundTest(SimpleTestCase):
    def test_base_cases(self):
        for j in range(6):
            self.assertEqual(ComplexityBoundService.complexity_bound(None, j), 0)
        for d in (None, 0, 1, 2, 3):
            self.assertEqual(ComplexityBoundService.complexity_bound(d, 0), 0)

    def test_known_values(self):
        self.assertEqual(ComplexityBoundService.complexity_bound(0, 1), 1)
        self.assertEqual(ComplexityBoundService.complexity_bound(0, 5), 5)
        self.assertEqual(ComplexityBoundService.complexity_bound(1, 1), 3)
        self.assertEqual(ComplexityBoundService.complexity_bound(1, 2), 20)
        self.assertEqual(ComplexityBoundService.complexity_bound(2, 1), 21)
        self.assertEqual(ComplexityBoundService.complexity_bound(1, 3), 2 ** 21 + 21)

    def test_overflow(self):
        with self.assertRaises(BoundOverflowError):
            ComplexityBoundService.complexity_bound(2, 2)
        self.assertEqual(ComplexityBoundService.default_budget(2, 2, 17), 17)

    def test_matches_direct_expansion(self):
        compared = 0
        for d in (None, 0, 1, 2, 3):
            for j in range(4):
                for sizes in product((1, 2), repeat=j):
                    for c_j in (0, 1, 2):
                        try:
                            expected = oracle_cprime(d, j, sizes, c_j) if d is not None else None
                        except BoundOverflowError:
                            continue
                        if expected is None:
                            continue
                        self.assertEqual(ComplexityBoundService.cprime(d, j, sizes, c_j), expected)
                        compared += 1
                try:
                    expected = oracle_bound(d, j)
                except BoundOverflowError:
                    continue
                self.assertEqual(ComplexityBoundService.complexity_bound(d, j), expected)
        self.assertGreater(compared, 20)

    def test_invalid_arguments(self):
        with self.assertRaises(ValidationError):
            ComplexityBoundService.cprime(1, 2, [1], 0)
        with self.assertRaises(ValidationError):
            ComplexityBoundService.complexity_bound(1, -1)


class SystemSerializerTest(SimpleTestCase):
    def test_system_descriptor(self):
        data = {
            "maps": [{"model": {"kind": "zr"}, "dim": 3, "entries": {"1,3": {"2": 1}}}],
            "length": 2,
        }
        serializer = SystemSerializer(data=data)
        self.assertTrue(serializer.is_valid(), serializer.errors)
        self.assertEqual(serializer.validated_data["system"].j, 1)

    def test_budget_or_length_required(self):
        data = {"maps": [{"model": {"kind": "zr"}, "dim": 3, "entries": {"1,3": {"1": 1}}}]}
        self.assertFalse(SystemSerializer(data=data).is_valid())

    def test_antihomomorphisms(self):
        data = {"antihomomorphisms": [
            {"model": {"kind": "zr"}, "dim": 4, "entries": {"1,2": {"1": 1}}},
            {"model": {"kind": "zr"}, "dim": 4, "entries": {"1,3": {"1": 1}}},
        ]}
        serializer = AntihomSystemSerializer(data=data)
        self.assertTrue(serializer.is_valid(), serializer.errors)
        self.assertEqual(serializer.validated_data["budget"], 2)
