from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Dict, Tuple

from django.core.exceptions import ValidationError
from sympy.polys.domains import QQ
from sympy.polys.rings import PolyElement, PolyRing

from nilgroup.models import PermElement

ZR_KIND = "zr"
HEIS_KIND = "heis"


@lru_cache(maxsize=None)
def polynomial_ring(symbols: Tuple[str, ...]) -> PolyRing:
    """
    Кольцо многочленов с рациональными коэффициентами (кешируется).
    Целозначные многочлены вида n(n-1)/2 возникают уже у гомоморфизмов Z -> UT(n)
    """
    return PolyRing(list(symbols), QQ)


def coordinate_names(name: str, arity: int) -> Tuple[str, ...]:
    return tuple(f"{name}_{c}" for c in range(arity))


def to_fraction(coeff) -> Fraction:
    return Fraction(int(coeff.numerator), int(coeff.denominator))


@dataclass(frozen=True)
class GroupModel:
    """
    Дискретная группа Gamma: Z^r либо группа Гейзенберга H_3(Z)
    с координатами (x, y, z) и законом (x+x', y+y', z+z'+x*y').
    Операции работают как с целыми, так и с многочленами.
    """

    kind: str = ZR_KIND
    rank: int = 1

    def __post_init__(self):
        if self.kind not in (ZR_KIND, HEIS_KIND):
            raise ValidationError(f"Неизвестная модель группы: {self.kind}")
        if self.kind == HEIS_KIND and self.rank != 3:
            raise ValidationError("Группа Гейзенберга имеет ровно три координаты")
        if self.rank < 1:
            raise ValidationError("Ранг должен быть не меньше 1")

    @classmethod
    def zr(cls, rank: int) -> "GroupModel":
        return cls(ZR_KIND, rank)

    @classmethod
    def heis(cls) -> "GroupModel":
        return cls(HEIS_KIND, 3)

    @property
    def arity(self) -> int:
        return self.rank

    @property
    def is_abelian(self) -> bool:
        return self.kind == ZR_KIND

    @property
    def variables(self) -> Tuple[str, ...]:
        return tuple(f"n{c}" for c in range(self.arity))

    def identity(self) -> Tuple[int, ...]:
        return (0,) * self.arity

    def mul(self, x, y) -> tuple:
        if self.kind == ZR_KIND:
            return tuple(a + b for a, b in zip(x, y, strict=True))
        return (x[0] + y[0], x[1] + y[1], x[2] + y[2] + x[0] * y[1])

    def inv(self, x) -> tuple:
        if self.kind == ZR_KIND:
            return tuple(-a for a in x)
        return (-x[0], -x[1], -x[2] + x[0] * x[1])

    def __str__(self):
        return "Heis" if self.kind == HEIS_KIND else f"Z^{self.rank}"


@dataclass(frozen=True)
class PolyMap:
    """
    Отображение Gamma -> UT(dim) с многочленами в элементах матрицы.

    Переменные кольца: координаты n (n0, n1, ...), затем координаты
    объявленных символьных параметров (a_0, a_1, ... для параметра "a").
    """

    model: GroupModel
    dim: int
    entries: Tuple[Tuple[PolyElement, ...], ...]
    params: Tuple[str, ...] = ()

    @property
    def ring(self) -> PolyRing:
        return self.entries[0][0].ring

    @cached_property
    def compiled(self) -> Tuple[Tuple[int, int, Tuple[Tuple[Fraction, Tuple[Tuple[int, int], ...]], ...]], ...]:
        """
        Термы наддиагональных элементов для быстрого вычисления в целых точках:
        (i, j, ((коэффициент, ((индекс переменной, степень), ...)), ...))
        """
        result = []
        for i in range(self.dim):
            for j in range(i + 1, self.dim):
                terms = tuple(
                    (to_fraction(coeff), tuple((k, e) for k, e in enumerate(monom) if e))
                    for monom, coeff in self.entries[i][j].terms()
                )
                result.append((i, j, terms))
        return tuple(result)

    def __str__(self):
        rows = "; ".join(
            ", ".join(str(self.entries[i][j].as_expr()) for j in range(i + 1, self.dim))
            for i in range(self.dim - 1)
        )
        return f"{self.model}->UT{self.dim}[{rows}]"


@dataclass(frozen=True)
class PermMap:
    """
    Отображение Z^r -> Sym(degree) вида n -> prod base[k]^{p_k(n)}.
    Показатели - многочлены с целыми коэффициентами, поэтому отображение
    периодично по каждой координате с периодом НОК порядков base.
    """

    model: GroupModel
    base: Tuple[PermElement, ...]
    word: Tuple[Tuple[int, PolyElement], ...]

    def __post_init__(self):
        if not self.model.is_abelian:
            raise ValidationError("Отображения в перестановки поддерживаются только для Z^r")
        if len({p.degree for p in self.base}) != 1:
            raise ValidationError("Базовые перестановки должны иметь одинаковую степень")
        for k, exponent in self.word:
            if not 0 <= k < len(self.base):
                raise ValidationError("Ссылка на несуществующую базовую перестановку")
            if any(coeff.denominator != 1 for coeff in exponent.coeffs()):
                raise ValidationError("Показатели должны иметь целые коэффициенты")

    @property
    def degree(self) -> int:
        return self.base[0].degree

    def __str__(self):
        word = " * ".join(f"T{k}^({exponent.as_expr()})" for k, exponent in self.word)
        return f"{self.model}->Sym{self.degree}[{word or '1'}]"


@dataclass(frozen=True)
class Certified:
    """
    Полиномиальность подтверждена; trace - описание уровней рекурсии
    """

    trace: Tuple[str, ...] = ()
    status: str = field(default="Certified", init=False)


@dataclass(frozen=True)
class Refuted:
    """
    Полиномиальность опровергнута: цепочка производных и конкретные значения
    переменных, при которых нарушается шаблон уровня level
    """

    level: int
    position: Tuple[int, int] | None
    chain: Tuple[str, ...]
    witness: Dict[str, Tuple[int, ...]]
    status: str = field(default="Refuted", init=False)


@dataclass(frozen=True)
class Inconclusive:
    reason: str
    depth: int
    status: str = field(default="Inconclusive", init=False)


Verdict = Certified | Refuted | Inconclusive
