import numpy as np
from django.core.exceptions import ValidationError
from django.test import SimpleTestCase
from hypothesis import given, settings, strategies as st

from nilgroup.models import PermElement, Prefiltration, UTElement
from nilgroup.serializers import GroupElementSerializer, PrefiltrationSerializer
from nilgroup.services import CoordinateService, GroupService, PrefiltrationService

E = GroupService.elementary


def random_ut(rng, dim=4, bound=6):
    return PrefiltrationService.random_element(rng, dim, 1, bound)


ut_matrices = st.lists(st.integers(-9, 9), min_size=6, max_size=6).map(
    lambda values: CoordinateService.from_coordinates(4, values)
)


class GroupArithmeticTest(SimpleTestCase):
    def setUp(self):
        self.rng = np.random.default_rng(20240717)

    def test_identity_product(self):
        one = GroupService.identity_ut(3)
        self.assertEqual(GroupService.mul(one, one), one)

    def test_elementary_slots_add(self):
        self.assertEqual(GroupService.mul(E(3, 1, 2, 1), E(3, 1, 2, 2)), E(3, 1, 2, 3))

    def test_perm_convention(self):
        g = PermElement((1, 0, 2))
        h = PermElement((0, 2, 1))
        product = GroupService.mul(g, h)
        self.assertEqual(product, PermElement((1, 2, 0)))
        self.assertEqual(product.images, tuple(g.images[h.images[x]] for x in range(3)))

    def test_inverse_of_elementary(self):
        self.assertEqual(GroupService.inv(E(3, 1, 3, 5)), E(3, 1, 3, -5))
        self.assertEqual(GroupService.inv(GroupService.identity_ut(4)), GroupService.identity_ut(4))

    def test_inverse_property_random(self):
        one = GroupService.identity_ut(4)
        for _ in range(1000):
            g = random_ut(self.rng)
            self.assertEqual(GroupService.mul(g, GroupService.inv(g)), one)
            self.assertEqual(GroupService.inv(GroupService.inv(g)), g)

    def test_associativity_random(self):
        for _ in range(1000):
            g, h, k = (random_ut(self.rng) for _ in range(3))
            self.assertEqual(
                GroupService.mul(GroupService.mul(g, h), k),
                GroupService.mul(g, GroupService.mul(h, k)),
            )

    def test_heisenberg_commutator(self):
        self.assertEqual(GroupService.commutator(E(3, 1, 2, 1), E(3, 2, 3, 1)), E(3, 1, 3, 1))

    def test_commutator_with_identity(self):
        g = random_ut(self.rng)
        self.assertTrue(GroupService.commutator(g, GroupService.identity_ut(4)).is_identity)

    @given(ut_matrices, ut_matrices)
    @settings(deadline=None, max_examples=200)
    def test_commutator_definition(self, g, h):
        inv = GroupService.inv
        mul = GroupService.mul
        expected = mul(mul(mul(inv(g), inv(h)), g), h)
        self.assertEqual(GroupService.commutator(g, h), expected)
        self.assertEqual(GroupService.commutator(h, g), inv(expected))

    def test_mismatch_raises(self):
        with self.assertRaises(ValidationError):
            GroupService.mul(E(3, 1, 2, 1), E(4, 1, 2, 1))
        with self.assertRaises(ValidationError):
            GroupService.mul(E(3, 1, 2, 1), PermElement((0, 1, 2)))

    def test_invalid_elements(self):
        with self.assertRaises(ValidationError):
            UTElement(2, ((1, 0), (1, 1)))
        with self.assertRaises(ValidationError):
            PermElement((0, 0, 1))

    def test_perm_order(self):
        self.assertEqual(GroupService.order(PermElement((1, 2, 0, 4, 3))), 6)

    @given(st.lists(st.integers(-20, 20), min_size=6, max_size=6))
    @settings(deadline=None)
    def test_coordinates_roundtrip(self, exponents):
        g = CoordinateService.from_coordinates(4, exponents)
        self.assertEqual(CoordinateService.coordinates(g), tuple(exponents))


class PrefiltrationTest(SimpleTestCase):
    def setUp(self):
        self.rng = np.random.default_rng(7)

    def test_membership(self):
        lcs = PrefiltrationService.lcs(3)
        self.assertTrue(PrefiltrationService.member(GroupService.identity_ut(3), lcs, 5))
        self.assertFalse(PrefiltrationService.member(E(3, 1, 2, 1), lcs, 2))
        self.assertTrue(PrefiltrationService.member(E(3, 1, 3, 1), lcs, 2))
        self.assertFalse(PrefiltrationService.member(E(3, 1, 3, 1), lcs, 3))

    def test_refine_scalar_levels(self):
        refined = PrefiltrationService.refine_scalar(PrefiltrationService.lcs(3), 2)
        self.assertEqual(refined.offsets, (1, 1, 1, 2, 2))
        self.assertEqual(refined.length, 4)
        self.assertIsNone(refined.offset(5))

    def test_refine_scalar_one_is_lcs(self):
        lcs = PrefiltrationService.lcs(4)
        self.assertEqual(PrefiltrationService.refine_scalar(lcs, 1), lcs)
        self.assertEqual(lcs.offsets, (1, 1, 2, 3))

    def test_refine_length(self):
        for n in range(2, 6):
            for d in range(1, 5):
                refined = PrefiltrationService.refine_scalar(PrefiltrationService.lcs(n), d)
                self.assertEqual(refined.length, d * (n - 1))
                PrefiltrationService.validate(refined)

    def test_shift(self):
        lcs = PrefiltrationService.lcs(4)
        self.assertEqual(PrefiltrationService.shift(lcs, 1).offsets, (1, 2, 3))
        self.assertIsNone(PrefiltrationService.shift(lcs, 4).length)

    def test_minus_infinity_length(self):
        trivial = Prefiltration(3, ())
        self.assertIsNone(trivial.length)
        self.assertFalse(PrefiltrationService.member(E(3, 1, 3, 1), trivial, 0))

    def test_commutator_condition_sampled(self):
        lcs = PrefiltrationService.lcs(4)
        PrefiltrationService.validate(lcs, self.rng, samples=50)
        d = lcs.length
        for i in range(d + 1):
            for j in range(d + 1):
                for _ in range(1000 // (d + 1) ** 2 + 1):
                    g = PrefiltrationService.random_element(self.rng, 4, lcs.offsets[i])
                    h = PrefiltrationService.random_element(self.rng, 4, lcs.offsets[j])
                    self.assertTrue(PrefiltrationService.member(GroupService.commutator(g, h), lcs, i + j))

    def test_invalid_prefiltration(self):
        with self.assertRaises(ValidationError):
            PrefiltrationService.validate(Prefiltration(3, (1, 1)))
        with self.assertRaises(ValidationError):
            Prefiltration(3, (2, 1))


class SerializerTest(SimpleTestCase):
    def test_ut_roundtrip(self):
        data = {"ut": {"dim": 2, "entries": [[1, 4], [0, 1]]}}
        serializer = GroupElementSerializer(data=data)
        self.assertTrue(serializer.is_valid(), serializer.errors)
        self.assertEqual(serializer.validated_data["element"], E(2, 1, 2, 4))
        self.assertEqual(GroupElementSerializer(E(2, 1, 2, 4)).data, data)

    def test_rejects_both_variants(self):
        serializer = GroupElementSerializer(data={"perm": [0], "ut": {"dim": 1, "entries": [[1]]}})
        self.assertFalse(serializer.is_valid())

    def test_rejects_unknown_field(self):
        serializer = PrefiltrationSerializer(data={"dim": 3, "levels": [1, 1, 2], "extra": 1})
        self.assertFalse(serializer.is_valid())

    def test_prefiltration(self):
        serializer = PrefiltrationSerializer(data={"dim": 3, "levels": [1, 1, 2]})
        self.assertTrue(serializer.is_valid(), serializer.errors)
        self.assertEqual(serializer.validated_data["prefiltration"], PrefiltrationService.lcs(3))
