from fractions import Fraction

from django.core.exceptions import ValidationError
from django.test import SimpleTestCase, override_settings
from hypothesis import given, strategies as st
from rest_framework import serializers

from utils.parallel import parallel_map
from utils.rationals import format_rational, parse_rational
from utils.serializers import RationalField, StrictSerializer
from utils.validates import validate_permutation, validate_positive, validate_probability, validate_same_shape


class RationalsTest(SimpleTestCase):
    def test_parse(self):
        self.assertEqual(parse_rational("3/6"), Fraction(1, 2))
        self.assertEqual(parse_rational(" -7 "), Fraction(-7))
        self.assertEqual(parse_rational(5), Fraction(5))
        self.assertEqual(parse_rational(Fraction(2, 3)), Fraction(2, 3))

    def test_rejects_floats_and_garbage(self):
        for value in (0.5, "1/0", "abc", True, None, "1.5"):
            with self.assertRaises(ValidationError):
                parse_rational(value)

    def test_format(self):
        self.assertEqual(format_rational(Fraction(4, 2)), "2")
        self.assertEqual(format_rational(Fraction(-1, 3)), "-1/3")

    @given(st.fractions())
    def test_text_form_is_exact(self, value):
        self.assertEqual(parse_rational(format_rational(value)), value)


class ValidatesTest(SimpleTestCase):
    def test_positive(self):
        validate_positive(Fraction(1, 10), "eps")
        with self.assertRaises(ValidationError):
            validate_positive(0, "eps")

    def test_probability(self):
        validate_probability([Fraction(1, 3), Fraction(2, 3)])
        for weights in ([], [Fraction(1, 2)], [Fraction(3, 2), Fraction(-1, 2)]):
            with self.assertRaises(ValidationError):
                validate_probability(weights)

    def test_permutation(self):
        validate_permutation([2, 0, 1])
        with self.assertRaises(ValidationError):
            validate_permutation([0, 0, 1])

    def test_same_shape(self):
        with self.assertRaises(ValidationError):
            validate_same_shape(3, 4, "функция")


class ParallelTest(SimpleTestCase):
    @override_settings(WALSHLAB_THREADS=4)
    def test_order_preserved(self):
        self.assertEqual(parallel_map(lambda x: x * x, range(20)), [x * x for x in range(20)])

    def test_sequential(self):
        self.assertEqual(parallel_map(str, [1, 2], threads=1), ["1", "2"])


class Sample(StrictSerializer):
    value = RationalField()


class SerializersTest(SimpleTestCase):
    def test_rational_field(self):
        serializer = Sample(data={"value": "2/4"})
        self.assertTrue(serializer.is_valid(), serializer.errors)
        self.assertEqual(serializer.validated_data["value"], Fraction(1, 2))
        self.assertEqual(Sample({"value": Fraction(1, 2)}).data["value"], "1/2")

    def test_unknown_fields(self):
        serializer = Sample(data={"value": "1", "extra": 1})
        self.assertFalse(serializer.is_valid())
        self.assertIn("extra", serializer.errors)

    def test_invalid_rational(self):
        self.assertFalse(Sample(data={"value": 0.5}).is_valid())
        self.assertIsInstance(RationalField(), serializers.Field)
