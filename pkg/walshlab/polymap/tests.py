import numpy as np
from django.core.exceptions import ValidationError
from django.test import SimpleTestCase
from hypothesis import given, settings, strategies as st

from nilgroup.models import UTElement
from nilgroup.services import GroupService, PrefiltrationService
from polymap.models import Certified, GroupModel, Inconclusive, Refuted
from polymap.serializers import PermMapSerializer, PolyMapSerializer
from polymap.services import PermMapService, PolyMapService, PolynomialityService, RandomMapService

E = GroupService.elementary
Z1 = GroupModel.zr(1)
Z2 = GroupModel.zr(2)
HEIS = GroupModel.heis()


def refined(dim, d):
    return PrefiltrationService.refine_scalar(PrefiltrationService.lcs(dim), d)


def numeric_derivative(g, shifts, n):
    """
    D_{c_1} ... D_{c_k} g(n), вычисленное через значения g в точках
    """
    if not shifts:
        return PolyMapService.evaluate(g, n)
    *rest, c = shifts
    here = numeric_derivative(g, rest, n)
    there = numeric_derivative(g, rest, g.model.mul(n, c))
    return GroupService.mul(GroupService.inv(here), there)


def square_map():
    (n,) = PolyMapService.variables(Z1)
    return PolyMapService.one_parameter(Z1, 3, 1, 3, n ** 2)


class PolyMapCalculusTest(SimpleTestCase):
    def setUp(self):
        self.rng = np.random.default_rng(4242)

    def test_evaluate_constant(self):
        g = PolyMapService.constant(Z1, E(3, 1, 3, 5))
        self.assertEqual(PolyMapService.evaluate(g, (7,)), E(3, 1, 3, 5))

    def test_evaluate_square(self):
        self.assertEqual(PolyMapService.evaluate(square_map(), (3,)), E(3, 1, 3, 9))

    def test_evaluate_heisenberg_embedding(self):
        value = PolyMapService.evaluate(PolyMapService.heisenberg_embedding(), (1, 2, 3))
        self.assertEqual(value, UTElement(3, ((1, 1, 3), (0, 1, 2), (0, 0, 1))))

    def test_unbound_parameter(self):
        d = PolyMapService.derivative(square_map(), "a", "b")
        with self.assertRaises(ValidationError):
            PolyMapService.evaluate(d, (1,), {"a": (1,)})

    def test_translate_by_identity(self):
        g = square_map()
        self.assertTrue(PolyMapService.equal(PolyMapService.translate(g), g))

    def test_translate_integers(self):
        (n,) = PolyMapService.variables(Z1)
        expected = PolyMapService.one_parameter(Z1, 3, 1, 3, (n + 2) ** 2)
        self.assertTrue(PolyMapService.equal(PolyMapService.translate(square_map(), (1,), (1,)), expected))

    def test_translate_heisenberg_cross_term(self):
        g = RandomMapService.random_polynomial_map(self.rng, HEIS, 3, 1)
        a, b = (1, 0, 0), (0, 1, 0)
        shifted = PolyMapService.translate(g, a, b)
        for _ in range(100):
            n = tuple(int(v) for v in self.rng.integers(-6, 7, size=3))
            anb = HEIS.mul(HEIS.mul(a, n), b)
            self.assertEqual(PolyMapService.evaluate(shifted, n), PolyMapService.evaluate(g, anb))

    @settings(deadline=None, max_examples=50)
    @given(
        st.tuples(st.integers(-4, 4), st.integers(-4, 4), st.integers(-4, 4)),
        st.tuples(st.integers(-4, 4), st.integers(-4, 4), st.integers(-4, 4)),
    )
    def test_symbolic_translate_matches_group_law(self, a, n):
        g = PolyMapService.heisenberg_embedding()
        shifted = PolyMapService.translate(g, "a", "b")
        b = (1, -2, 3)
        value = PolyMapService.evaluate(shifted, n, {"a": a, "b": b})
        self.assertEqual(value, PolyMapService.evaluate(g, HEIS.mul(HEIS.mul(a, n), b)))

    def test_derivative_of_constant(self):
        g = PolyMapService.constant(HEIS, E(4, 2, 4, 3))
        self.assertTrue(PolyMapService.is_identity(PolyMapService.derivative(g, "a", "b")))

    def test_derivative_of_square(self):
        d = PolyMapService.derivative(square_map(), "a", "b")
        n, a, b = PolyMapService.ring_for(Z1, ("a", "b")).gens
        expected = PolyMapService.from_matrix(Z1, [[0, 0, 2 * n * (a + b) + (a + b) ** 2], [0, 0, 0], [0, 0, 0]], ("a", "b"))
        self.assertTrue(PolyMapService.equal(d, expected))
        self.assertEqual(PolyMapService.n_degree(d), 1)
        for _ in range(20):
            n0, a0, b0 = (int(v) for v in self.rng.integers(-20, 21, size=3))
            direct = GroupService.mul(
                GroupService.inv(PolyMapService.evaluate(square_map(), (n0,))),
                PolyMapService.evaluate(square_map(), (n0 + a0 + b0,)),
            )
            self.assertEqual(PolyMapService.evaluate(d, (n0,), {"a": (a0,), "b": (b0,)}), direct)

    def test_power_map_matches_powers(self):
        h = GroupService.mul(E(4, 1, 2, 1), GroupService.mul(E(4, 2, 3, 2), E(4, 3, 4, -1)))
        g = PolyMapService.power_map(Z1, h)
        for m in range(-6, 7):
            self.assertEqual(PolyMapService.evaluate(g, (m,)), GroupService.power(h, m))

    def test_derivative_of_homomorphism(self):
        h = GroupService.mul(E(3, 1, 2, 1), E(3, 2, 3, 1))
        g = PolyMapService.power_map(Z1, h)
        d = PolyMapService.derivative(g, "a", "b")
        self.assertTrue(PolyMapService.is_constant(d))
        for _ in range(20):
            n0, a0, b0 = (int(v) for v in self.rng.integers(-10, 11, size=3))
            self.assertEqual(
                PolyMapService.evaluate(d, (n0,), {"a": (a0,), "b": (b0,)}),
                GroupService.power(h, a0 + b0),
            )

    def test_right_derivative_is_two_sided_with_identity(self):
        g = RandomMapService.random_polynomial_map(self.rng, HEIS, 3, 1)
        self.assertTrue(PolyMapService.equal(
            PolyMapService.right_derivative(g, "b"),
            PolyMapService.derivative(g, None, "b"),
        ))
        self.assertTrue(PolyMapService.is_identity(
            PolyMapService.right_derivative(PolyMapService.constant(HEIS, E(3, 1, 2, 4)), "b")
        ))

    def test_antihomomorphism_inverse_derivative(self):
        embedding = PolyMapService.heisenberg_embedding()
        g = PolyMapService.pointwise_inv(embedding)
        self.assertTrue(PolyMapService.is_antihomomorphism(g))
        self.assertFalse(PolyMapService.is_homomorphism(g))
        self.assertTrue(PolyMapService.is_homomorphism(embedding))
        self.assertFalse(PolyMapService.is_antihomomorphism(embedding))

        derived = PolyMapService.right_derivative(PolyMapService.pointwise_inv(g), "b")
        expected = PolyMapService.pointwise_inv(PolyMapService.at(g, "b"))
        self.assertTrue(PolyMapService.is_constant(derived))
        self.assertTrue(PolyMapService.equal(derived, expected))

    def test_pointwise_inverse(self):
        g = RandomMapService.random_polynomial_map(self.rng, Z2, 4, 1)
        self.assertTrue(PolyMapService.is_identity(PolyMapService.pointwise_mul(g, PolyMapService.pointwise_inv(g))))

    def test_pointwise_mismatch(self):
        with self.assertRaises(ValidationError):
            PolyMapService.pointwise_mul(PolyMapService.identity(Z1, 3), PolyMapService.identity(Z2, 3))
        with self.assertRaises(ValidationError):
            PolyMapService.pointwise_mul(PolyMapService.identity(Z1, 3), PolyMapService.identity(Z1, 4))

    def test_cocycle_identity(self):
        for model in (Z1, Z2, HEIS):
            g = RandomMapService.random_polynomial_map(self.rng, model, 3, 1)
            self.assertTrue(PolyMapService.equal(
                PolyMapService.translate(g, "a", "b"),
                PolyMapService.pointwise_mul(g, PolyMapService.derivative(g, "a", "b")),
            ))

    def test_commute_pointwise(self):
        (n,) = PolyMapService.variables(Z1)
        g = PolyMapService.one_parameter(Z1, 3, 1, 3, n)
        h = PolyMapService.one_parameter(Z1, 3, 1, 2, n)
        k = PolyMapService.one_parameter(Z1, 3, 2, 3, n)
        self.assertTrue(PolyMapService.commute_pointwise(g, h))
        self.assertFalse(PolyMapService.commute_pointwise(h, k))


class PolynomialityTest(SimpleTestCase):
    def setUp(self):
        self.rng = np.random.default_rng(777)

    def test_identity_certified(self):
        for gb in (PrefiltrationService.lcs(3), PrefiltrationService.shift(PrefiltrationService.lcs(3), 5)):
            self.assertIsInstance(PolynomialityService.is_polynomial(PolyMapService.identity(Z2, 3), gb), Certified)

    def test_two_dimensional_example(self):
        n1, n2 = PolyMapService.variables(Z2)
        g = PolyMapService.from_factors(Z2, 3, [(1, 2, n1), (2, 3, n2), (1, 3, n1 * n2)])
        verdict = PolynomialityService.is_polynomial(g, refined(3, 2))
        self.assertIsInstance(verdict, Certified)
        one = GroupService.identity_ut(3)
        for _ in range(50):
            n = tuple(int(v) for v in self.rng.integers(-8, 9, size=2))
            shifts = [tuple(int(v) for v in self.rng.integers(-8, 9, size=2)) for _ in range(3)]
            self.assertEqual(numeric_derivative(g, shifts, n), one)

    def test_square_scalar_degree(self):
        self.assertTrue(PolynomialityService.scalar_degree_check(square_map(), 2))
        self.assertFalse(PolynomialityService.scalar_degree_check(square_map(), 1))
        self.assertTrue(PolynomialityService.scalar_degree_check(PolyMapService.constant(Z1, E(3, 1, 2, 1)), 0))

    def test_refuted_witness(self):
        (n,) = PolyMapService.variables(Z1)
        g = PolyMapService.one_parameter(Z1, 3, 1, 2, n ** 2)
        verdict = PolynomialityService.is_polynomial(g, PrefiltrationService.lcs(3))
        self.assertIsInstance(verdict, Refuted)
        self.assertEqual((verdict.level, verdict.position), (2, (0, 1)))
        self.assertEqual(len(verdict.chain), 3)
        first, second = (verdict.witness[name][0] for name in ("t0", "t1"))
        self.assertNotEqual(2 * first * second, 0)
        self.assertIsInstance(PolynomialityService.is_polynomial(g, refined(3, 2)), Certified)

    def test_depth_cap_inconclusive(self):
        verdict = PolynomialityService.is_polynomial(square_map(), refined(3, 2), depth_cap=1)
        self.assertIsInstance(verdict, Inconclusive)
        self.assertEqual(verdict.status, "Inconclusive")

    def test_dihedral_product(self):
        g1, g2 = RandomMapService.dihedral_fixture()
        gb = PrefiltrationService.scalar(3, 1)
        self.assertIsInstance(PolynomialityService.is_polynomial(g1, gb), Certified)
        self.assertIsInstance(PolynomialityService.is_polynomial(g2, gb), Certified)
        product = PermMapService.pointwise_mul(g1, g2)
        self.assertIsInstance(PolynomialityService.is_polynomial(product, gb), Refuted)
        self.assertFalse(PolynomialityService.scalar_degree_check(product, 1))
        for n in range(6):
            expected = (1, 2, 0) if n % 2 else (0, 1, 2)
            self.assertEqual(PermMapService.evaluate(product, (n,)).images, expected)

    def test_group_closure(self):
        models = (Z1, Z2, HEIS)
        for k in range(100):
            model = models[k % 3]
            dim = 3 if model == HEIS else 3 + k % 2
            gb = refined(dim, 1)
            g = RandomMapService.random_polynomial_map(self.rng, model, dim, 1)
            h = RandomMapService.random_polynomial_map(self.rng, model, dim, 1)
            self.assertIsInstance(PolynomialityService.is_polynomial(g, gb), Certified)
            self.assertIsInstance(PolynomialityService.is_polynomial(h, gb), Certified)
            product = PolyMapService.pointwise_mul(g, h)
            self.assertIsInstance(PolynomialityService.is_polynomial(product, gb), Certified)
            self.assertIsInstance(PolynomialityService.is_polynomial(PolyMapService.pointwise_inv(g), gb), Certified)

    def test_degree_descent_and_shift_invariance(self):
        for model, d in ((Z1, 2), (HEIS, 1)):
            gb = refined(3, d)
            g = RandomMapService.random_polynomial_map(self.rng, model, 3, d)
            self.assertIsInstance(PolynomialityService.is_polynomial(g, gb), Certified)
            derived = PolynomialityService.symbolic_derivative(g)
            self.assertIsInstance(PolynomialityService.is_polynomial(derived, PrefiltrationService.shift(gb, 1)), Certified)
            point = (1,) if model == Z1 else (1, -1, 2)
            shifted = PolyMapService.translate(g, point, point)
            self.assertIsInstance(PolynomialityService.is_polynomial(shifted, gb), Certified)

    def test_homomorphisms_certified(self):
        h = GroupService.mul(E(4, 1, 2, 1), E(4, 2, 3, 1))
        g = PolyMapService.homomorphism(Z2, [h, GroupService.power(h, 2)])
        self.assertTrue(PolyMapService.is_homomorphism(g))
        self.assertIsInstance(PolynomialityService.is_polynomial(g, PrefiltrationService.lcs(4)), Certified)
        embedding = PolyMapService.heisenberg_embedding()
        self.assertIsInstance(PolynomialityService.is_polynomial(embedding, PrefiltrationService.lcs(3)), Certified)

    def test_commutator_of_polynomials(self):
        gb = refined(3, 2)
        n1, n2 = PolyMapService.variables(Z2)
        g = PolyMapService.one_parameter(Z2, 3, 1, 2, n1)
        h = PolyMapService.one_parameter(Z2, 3, 2, 3, n2)
        self.assertIsInstance(PolynomialityService.is_polynomial(g, PrefiltrationService.shift(gb, 1)), Certified)
        self.assertIsInstance(PolynomialityService.is_polynomial(h, PrefiltrationService.shift(gb, 1)), Certified)
        commutator = PolyMapService.commutator_map(g, h)
        self.assertIsInstance(PolynomialityService.is_polynomial(commutator, PrefiltrationService.shift(gb, 2)), Certified)

    def test_scalar_degree_cross_check(self):
        (n,) = PolyMapService.variables(Z1)
        for k in range(50):
            d = 1 + k % 2
            if k < 25:
                degree = int(self.rng.integers(0, 4))
                coefficient = int(self.rng.integers(1, 4))
                g = PolyMapService.one_parameter(Z1, 3, 1 + k % 2, 2 + k % 2, coefficient * n ** degree + n)
                scalar = PolynomialityService.scalar_degree_check(g, d)
                certified = isinstance(PolynomialityService.is_polynomial(g, refined(3, d)), Certified)
                self.assertEqual(scalar, certified)
                self.assertEqual(scalar, max(degree, 1) <= d)
            else:
                g = RandomMapService.random_polynomial_map(self.rng, Z1, 3, d)
                certified = isinstance(PolynomialityService.is_polynomial(g, refined(3, d)), Certified)
                self.assertTrue(certified)
                self.assertTrue(PolynomialityService.scalar_degree_check(g, 2 * d))
                if PolynomialityService.scalar_degree_check(g, d):
                    self.assertTrue(certified)


class PolyMapSerializerTest(SimpleTestCase):
    def test_sparse_polynomial_map(self):
        data = {"model": {"kind": "zr", "rank": 1}, "dim": 3, "entries": {"1,3": {"2": 1}}}
        serializer = PolyMapSerializer(data=data)
        self.assertTrue(serializer.is_valid(), serializer.errors)
        self.assertTrue(PolyMapService.equal(serializer.validated_data["map"], square_map()))
        self.assertEqual(PolyMapSerializer(square_map()).data["entries"], {"1,3": {"2": "1"}})

    def test_invalid_position(self):
        data = {"model": {"kind": "zr"}, "dim": 3, "entries": {"3,1": {"1": 1}}}
        self.assertFalse(PolyMapSerializer(data=data).is_valid())

    def test_unknown_field(self):
        data = {"model": {"kind": "heis"}, "dim": 3, "colour": "red"}
        self.assertFalse(PolyMapSerializer(data=data).is_valid())

    def test_perm_map(self):
        data = {"model": {"kind": "zr"}, "base": [[0, 2, 1], [2, 1, 0]], "word": [[0, {"1": 1}], [1, {"1": 1}]]}
        serializer = PermMapSerializer(data=data)
        self.assertTrue(serializer.is_valid(), serializer.errors)
        verdict = PolynomialityService.is_polynomial(serializer.validated_data["map"], PrefiltrationService.scalar(3, 1))
        self.assertIsInstance(verdict, Refuted)
