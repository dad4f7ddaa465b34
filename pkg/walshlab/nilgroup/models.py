from dataclasses import dataclass
from typing import Tuple, Union

from django.core.exceptions import ValidationError

from utils.validates import validate_permutation

Matrix = Tuple[Tuple[int, ...], ...]


@dataclass(frozen=True)
class UTElement:
    """
    Верхняя унитреугольная целочисленная матрица (элемент UT(dim, Z))
    """

    dim: int
    entries: Matrix

    def __post_init__(self):
        if self.dim < 1 or len(self.entries) != self.dim:
            raise ValidationError(f"Ожидалась матрица размера {self.dim}")
        for row_index, row in enumerate(self.entries):
            if len(row) != self.dim:
                raise ValidationError(f"Строка {row_index} имеет длину {len(row)}, ожидалось {self.dim}")
            for column_index, value in enumerate(row):
                if column_index < row_index and value != 0:
                    raise ValidationError("Элементы под диагональю должны быть нулевыми")
                if column_index == row_index and value != 1:
                    raise ValidationError("Элементы на диагонали должны быть равны 1")

    @property
    def is_identity(self) -> bool:
        return all(
            value == 0
            for row_index, row in enumerate(self.entries)
            for column_index, value in enumerate(row)
            if column_index > row_index
        )

    def __str__(self):
        return f"UT{self.dim}{[list(row) for row in self.entries]}"


@dataclass(frozen=True)
class PermElement:
    """
    Перестановка множества {0, ..., degree-1}, images[x] - образ точки x.
    Произведение: (g*h)[x] = g[h[x]], т.е. правый множитель применяется первым.
    """

    images: Tuple[int, ...]

    def __post_init__(self):
        validate_permutation(self.images)

    @property
    def degree(self) -> int:
        return len(self.images)

    @property
    def is_identity(self) -> bool:
        return all(x == image for x, image in enumerate(self.images))

    def __str__(self):
        return f"Perm{list(self.images)}"


GroupElement = Union[UTElement, PermElement]

UT_KIND = "ut"
PERM_KIND = "perm"


@dataclass(frozen=True)
class Prefiltration:
    """
    Префильтрация G_0 >= G_1 >= ... >= G_d >= G_{d+1} = 1.

    Для UT(dim) уровень i задается сдвигом offsets[i]: элементы уровня -
    матрицы, у которых зануляются все позиции (r, c) с 0 < c - r < offsets[i].
    Для перестановок (kind="perm") каждый нетривиальный уровень - вся группа.
    Пустой список сдвигов соответствует длине минус бесконечность.
    """

    dim: int
    offsets: Tuple[int, ...]
    kind: str = UT_KIND

    def __post_init__(self):
        if self.kind not in (UT_KIND, PERM_KIND):
            raise ValidationError(f"Неизвестный тип префильтрации: {self.kind}")
        if any(k < 1 for k in self.offsets):
            raise ValidationError("Сдвиги уровней должны быть не меньше 1")
        if any(lower > upper for lower, upper in zip(self.offsets, self.offsets[1:])):
            raise ValidationError(f"Уровни должны убывать: сдвиги {list(self.offsets)} не монотонны")

    @property
    def length(self) -> int | None:
        """
        Длина d; None означает минус бесконечность
        """
        if not self.offsets:
            return None
        return len(self.offsets) - 1

    def offset(self, level: int) -> int | None:
        """
        Сдвиг уровня level либо None для тривиального уровня
        """
        if level < 0:
            raise ValidationError("Номер уровня должен быть неотрицательным")
        if level >= len(self.offsets):
            return None
        return self.offsets[level]

    def __str__(self):
        length = "-inf" if self.length is None else self.length
        return f"{self.kind}({self.dim}) levels={list(self.offsets)} length={length}"
