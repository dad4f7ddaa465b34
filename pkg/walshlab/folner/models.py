from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Dict, Iterator, Tuple

from django.core.exceptions import ValidationError

from polymap.models import GroupModel

Element = Tuple[int, ...]


@dataclass(frozen=True)
class FolnerSet:
    """
    Множество a F_N b. Канонические F_N:
    Z^r - {0, ..., N-1}^r, Heis - {0 <= x, y < N, 0 <= z < N^2}
    """

    model: GroupModel
    N: int
    a: Element | None = None
    b: Element | None = None

    def __post_init__(self):
        if self.N < 1:
            raise ValidationError("Индекс множества Фёльнера должен быть не меньше 1")
        for shift in (self.a, self.b):
            if shift is not None and len(shift) != self.model.arity:
                raise ValidationError(f"Сдвиг {shift} не является элементом {self.model}")

    @property
    def floor(self) -> int:
        return self.N

    @property
    def left(self) -> Element:
        return self.a if self.a is not None else self.model.identity()

    @property
    def right(self) -> Element:
        return self.b if self.b is not None else self.model.identity()

    def canonical(self) -> Iterator[Element]:
        N = self.N
        if self.model.is_abelian:
            return product(range(N), repeat=self.model.rank)
        return product(range(N), range(N), range(N * N))

    def __str__(self):
        return f"{self.left}*F_{self.N}({self.model})*{self.right}"


@dataclass(frozen=True)
class PhiResult:
    """
    Наименьшее N с sup_{l in F_L} |l F_N D F_N| / |F_N| < gamma
    """

    N: int
    gamma: Fraction
    L: int
    sup_ratio: Fraction
    verified_monotone: bool


@dataclass(frozen=True)
class CeilResult:
    """
    Число [I, I']_gamma: для каждого N >= n0 найдется b с I, I' <~_gamma F_N b.
    proof_n - порог из усредняющего аргумента, после него свидетель гарантирован.
    verified_monotone - условие порога выполнено и в окне после proof_n (для Z^r всегда).
    """

    n0: int
    proof_n: int
    beta: Fraction
    witnesses: Dict[int, Element] = field(default_factory=dict)
    verified_monotone: bool = True
    status: str = field(default="Certified", init=False)
