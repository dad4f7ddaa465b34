from fractions import Fraction
from numbers import Rational

from django.core.exceptions import ValidationError


def parse_rational(value) -> Fraction:
    """
    Разбор рационального числа из строки "p/q", целого или Fraction.
    Числа с плавающей точкой не принимаются, чтобы не терять точность.
    """
    if isinstance(value, bool):
        raise ValidationError(f"Ожидалось рациональное число, получено {value!r}")

    if isinstance(value, Rational):
        return Fraction(value)

    if isinstance(value, str):
        text = value.strip()
        try:
            if "/" in text:
                numerator, denominator = text.split("/", 1)
                return Fraction(int(numerator), int(denominator))
            return Fraction(int(text))
        except (ValueError, ZeroDivisionError):
            pass

    raise ValidationError(f"Некорректное рациональное число: {value!r}")


def format_rational(value) -> str:
    """
    Запись рационального числа в виде "p/q" (или "p" для целых)
    """
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"
