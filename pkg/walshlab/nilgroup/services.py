import logging
from itertools import product
from typing import List, Sequence, Tuple

import numpy as np
from django.core.exceptions import ValidationError

from nilgroup.models import (
    GroupElement,
    PERM_KIND,
    PermElement,
    Prefiltration,
    UT_KIND,
    UTElement,
)
from utils.validates import validate_same_shape

logger = logging.getLogger(__name__)


def ut_matmul(left: Sequence[Sequence], right: Sequence[Sequence]) -> Tuple[Tuple, ...]:
    """
    Произведение верхних унитреугольных матриц.
    Работает с любыми кольцевыми элементами (int, многочлены sympy),
    единица и нуль берутся из самих матриц.
    """
    dim = len(left)
    rows = []
    for i in range(dim):
        row = []
        for j in range(dim):
            if j < i:
                row.append(left[i][j])
            elif j == i:
                row.append(left[i][i])
            else:
                value = left[i][j] + right[i][j]
                for k in range(i + 1, j):
                    value = value + left[i][k] * right[k][j]
                row.append(value)
        rows.append(tuple(row))
    return tuple(rows)


def ut_inverse(matrix: Sequence[Sequence]) -> Tuple[Tuple, ...]:
    """
    Обращение унитреугольной матрицы обратной подстановкой
    """
    dim = len(matrix)
    result = [[matrix[i][j] if j <= i else None for j in range(dim)] for i in range(dim)]
    for j in range(dim):
        for i in range(j - 1, -1, -1):
            value = -matrix[i][j]
            for k in range(i + 1, j):
                value = value - matrix[i][k] * result[k][j]
            result[i][j] = value
    return tuple(tuple(row) for row in result)


def peel_order(dim: int) -> List[Tuple[int, int]]:
    """
    Порядок позиций (i, j) при разложении по элементарным матрицам:
    по возрастанию сдвига j - i, внутри сдвига по строкам
    """
    return [(i, i + k) for k in range(1, dim) for i in range(dim - k)]


class GroupService:
    """
    Точная арифметика в UT(n, Z) и в конечных группах перестановок
    """

    @staticmethod
    def identity_ut(dim: int) -> UTElement:
        return UTElement(dim, tuple(tuple(int(i == j) for j in range(dim)) for i in range(dim)))

    @staticmethod
    def identity_perm(degree: int) -> PermElement:
        return PermElement(tuple(range(degree)))

    @classmethod
    def identity_like(cls, g: GroupElement) -> GroupElement:
        if isinstance(g, UTElement):
            return cls.identity_ut(g.dim)
        return cls.identity_perm(g.degree)

    @staticmethod
    def elementary(dim: int, i: int, j: int, t: int) -> UTElement:
        """
        Элементарная матрица E_ij(t), индексы с единицы
        """
        if not 1 <= i < j <= dim:
            raise ValidationError(f"Некорректная позиция ({i}, {j}) для UT({dim})")
        rows = [[int(r == c) for c in range(dim)] for r in range(dim)]
        rows[i - 1][j - 1] = t
        return UTElement(dim, tuple(tuple(row) for row in rows))

    @staticmethod
    def _check_compatible(g: GroupElement, h: GroupElement) -> None:
        if type(g) is not type(h):
            logger.error(f"Несовместимые элементы: {g} и {h}")
            raise ValidationError("Элементы принадлежат разным типам групп")
        if isinstance(g, UTElement):
            validate_same_shape(g.dim, h.dim, "UT")
        else:
            validate_same_shape(g.degree, h.degree, "перестановки")

    @classmethod
    def mul(cls, g: GroupElement, h: GroupElement) -> GroupElement:
        """
        Произведение g*h
        """
        cls._check_compatible(g, h)
        if isinstance(g, UTElement):
            return UTElement(g.dim, ut_matmul(g.entries, h.entries))
        return PermElement(tuple(g.images[x] for x in h.images))

    @staticmethod
    def inv(g: GroupElement) -> GroupElement:
        if isinstance(g, UTElement):
            return UTElement(g.dim, ut_inverse(g.entries))
        inverse = [0] * g.degree
        for x, image in enumerate(g.images):
            inverse[image] = x
        return PermElement(tuple(inverse))

    @classmethod
    def power(cls, g: GroupElement, exponent: int) -> GroupElement:
        """
        Целая степень элемента (двоичное возведение)
        """
        base = g if exponent >= 0 else cls.inv(g)
        exponent = abs(exponent)
        result = cls.identity_like(g)
        while exponent:
            if exponent & 1:
                result = cls.mul(result, base)
            base = cls.mul(base, base)
            exponent >>= 1
        return result

    @classmethod
    def commutator(cls, g: GroupElement, h: GroupElement) -> GroupElement:
        """
        Коммутатор [g, h] = g^-1 h^-1 g h
        """
        cls._check_compatible(g, h)
        return cls.mul(cls.mul(cls.inv(g), cls.inv(h)), cls.mul(g, h))

    @staticmethod
    def order(g: PermElement) -> int:
        """
        Порядок перестановки (НОК длин циклов)
        """
        return int(np.lcm.reduce(PermutationCycles.lengths(g.images) or [1]))


class PermutationCycles:
    """
    Разложение массива образов на циклы
    """

    @staticmethod
    def lengths(images: Sequence[int]) -> List[int]:
        seen = [False] * len(images)
        lengths = []
        for start in range(len(images)):
            if seen[start]:
                continue
            length, x = 0, start
            while not seen[x]:
                seen[x] = True
                x = images[x]
                length += 1
            lengths.append(length)
        return lengths


class CoordinateService:
    """
    Координаты второго рода: g = prod E_ij^{e_ij} в порядке peel_order
    """

    @staticmethod
    def coordinates(g: UTElement) -> Tuple[int, ...]:
        current = g
        exponents = []
        for i, j in peel_order(g.dim):
            e = current.entries[i][j]
            exponents.append(e)
            if e:
                current = GroupService.mul(GroupService.elementary(g.dim, i + 1, j + 1, -e), current)
        return tuple(exponents)

    @staticmethod
    def from_coordinates(dim: int, exponents: Sequence[int]) -> UTElement:
        result = GroupService.identity_ut(dim)
        for (i, j), e in zip(peel_order(dim), exponents, strict=True):
            if e:
                result = GroupService.mul(result, GroupService.elementary(dim, i + 1, j + 1, e))
        return result


class PrefiltrationService:
    """
    Построение и проверка префильтраций
    """

    @staticmethod
    def lcs(dim: int) -> Prefiltration:
        """
        Нижний центральный ряд UT(dim), предваренный G_0 = G:
        G_0 = G_1 = UT, G_k - матрицы с нулевыми k-1 наддиагоналями
        """
        if dim < 1:
            raise ValidationError("Размерность должна быть не меньше 1")
        return Prefiltration(dim, (1,) + tuple(range(1, dim)))

    @staticmethod
    def refine_scalar(gb: Prefiltration, d: int) -> Prefiltration:
        """
        Измельчение, повторяющее каждый уровень G_1, ..., G_s ровно d раз
        """
        if d < 1:
            raise ValidationError("Кратность измельчения должна быть не меньше 1")
        if gb.length is None:
            return gb
        offsets = [gb.offsets[0]]
        for level in range(1, d * gb.length + 1):
            offsets.append(gb.offsets[-(-level // d)])
        return Prefiltration(gb.dim, tuple(offsets), gb.kind)

    @staticmethod
    def scalar(dim: int, d: int | None, kind: str = PERM_KIND) -> Prefiltration:
        """
        Префильтрация скалярной степени d: G_0 = ... = G_d = G, далее 1
        """
        if d is None:
            return Prefiltration(dim, (), kind)
        return Prefiltration(dim, (1,) * (d + 1), kind)

    @staticmethod
    def shift(gb: Prefiltration, t: int) -> Prefiltration:
        """
        Сдвинутая префильтрация Gb[+t], (Gb[+t])_i = G_{i+t}
        """
        if t < 0:
            raise ValidationError("Сдвиг должен быть неотрицательным")
        return Prefiltration(gb.dim, gb.offsets[t:], gb.kind)

    @staticmethod
    def member(g: GroupElement, gb: Prefiltration, level: int) -> bool:
        """
        Принадлежность g уровню G_level
        """
        offset = gb.offset(level)
        if offset is None:
            return g.is_identity
        if isinstance(g, PermElement):
            return True
        return all(
            g.entries[r][r + k] == 0
            for k in range(1, min(offset, g.dim))
            for r in range(g.dim - k)
        )

    @staticmethod
    def random_element(rng: np.random.Generator, dim: int, offset: int | None, bound: int = 5) -> UTElement:
        """
        Случайный элемент уровня со сдвигом offset (None - тривиальный уровень)
        """
        rows = [[int(r == c) for c in range(dim)] for r in range(dim)]
        if offset is not None:
            for r, c in product(range(dim), repeat=2):
                if c - r >= offset:
                    rows[r][c] = int(rng.integers(-bound, bound + 1))
        return UTElement(dim, tuple(tuple(row) for row in rows))

    @classmethod
    def validate(cls, gb: Prefiltration, rng: np.random.Generator | None = None, samples: int = 0) -> None:
        """
        Проверка условия [G_i, G_j] <= G_{i+j}.

        Для UT условие проверяется точно по сдвигам: [U_k, U_l] = U_{k+l},
        где U_k тривиален при k >= dim. Дополнительно (samples > 0)
        проверяются случайные пары элементов.
        """
        logger.debug(f"Проверка префильтрации {gb}")
        if gb.kind != UT_KIND or gb.length is None:
            return

        d = gb.length
        for i, j in product(range(d + 1), repeat=2):
            required = gb.offset(i + j)
            produced = gb.offsets[i] + gb.offsets[j]
            if produced >= gb.dim:
                continue
            if required is None or required > produced:
                logger.error(f"Нарушено условие [G_{i}, G_{j}] <= G_{i + j} для {gb}")
                raise ValidationError(f"Коммутатор уровней {i} и {j} не лежит в уровне {i + j}")

        if rng is None or not samples:
            return

        for i, j in product(range(d + 1), repeat=2):
            for _ in range(samples):
                g = cls.random_element(rng, gb.dim, gb.offsets[i])
                h = cls.random_element(rng, gb.dim, gb.offsets[j])
                if not cls.member(GroupService.commutator(g, h), gb, i + j):
                    logger.error(f"Выборочная проверка префильтрации не пройдена: {g}, {h}")
                    raise ValidationError(f"Коммутатор уровней {i} и {j} не лежит в уровне {i + j}")
