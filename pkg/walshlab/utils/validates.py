from fractions import Fraction
from typing import Sequence

from django.core.exceptions import ValidationError


def validate_positive(value, name: str) -> None:
    """
    Валидатор, проверяющий, что параметр строго положителен
    """
    if value <= 0:
        raise ValidationError(f"Параметр {name} должен быть положительным, получено {value}")


def validate_probability(weights: Sequence[Fraction]) -> None:
    """
    Валидатор вероятностного вектора: все веса положительны, сумма ровно 1
    """
    if not weights:
        raise ValidationError("Пустой набор весов")

    if any(w <= 0 for w in weights):
        raise ValidationError("Все веса должны быть положительными")

    total = sum(weights, Fraction(0))
    if total != 1:
        raise ValidationError(f"Сумма весов должна быть равна 1, получено {total}")


def validate_permutation(images: Sequence[int]) -> None:
    """
    Валидатор, проверяющий, что массив образов задает биекцию {0, ..., n-1}
    """
    if sorted(images) != list(range(len(images))):
        raise ValidationError(f"Массив {list(images)} не является перестановкой")


def validate_same_shape(left: int, right: int, what: str) -> None:
    """
    Валидатор совпадения размерностей двух объектов
    """
    if left != right:
        raise ValidationError(f"Несовпадение размерности ({what}): {left} и {right}")
