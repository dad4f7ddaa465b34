from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Dict, List, Tuple

from django.core.exceptions import ValidationError

from utils.rationals import format_rational

# phi_gamma(L) для объемлющей группы
PhiHandle = Callable[[Fraction, int], int]


@dataclass(frozen=True)
class RateProfile:
    """
    Подмены delta и длины лестницы ceil(2 delta^-2).
    Не соответствуют доказательству, нужны только для проверки рекурсий в малом масштабе.
    """

    delta: Fraction | None = None
    ladder_length: int | None = None

    def __post_init__(self):
        if self.delta is not None and self.delta <= 0:
            raise ValidationError("Подмена delta должна быть положительной")
        if self.ladder_length is not None and self.ladder_length < 1:
            raise ValidationError("Длина лестницы должна быть не меньше 1")

    @property
    def conforming(self) -> bool:
        return self.delta is None and self.ladder_length is None


CONFORMING = RateProfile()


@dataclass(frozen=True)
class GrowthFunction:
    """
    Функция N -> N, заданная выражением. Сравнение и хеширование - по тексту
    """

    text: str
    evaluate: Callable[[int], int] = field(compare=False, repr=False)

    def __call__(self, n: int) -> int:
        if n < 0:
            raise ValidationError(f"Аргумент функции роста должен быть натуральным, получено {n}")
        return self.evaluate(n)

    def __str__(self):
        return self.text


@dataclass(frozen=True)
class LadderStep:
    """
    Ступень (A_i, M_i = omega(A_i), B_i = psi(M_i)), A_{i+1} = B_i
    """

    A: int
    M: int
    B: int


@dataclass(frozen=True)
class RateBundle:
    epsilon: Fraction
    delta: Fraction
    eta_coefficient: Fraction
    ladder_length: int
    c_star: Fraction
    gammas: Tuple[Fraction, ...]
    profile: RateProfile = CONFORMING

    def eta(self, x: Fraction) -> Fraction:
        return self.eta_coefficient / x

    def to_dict(self) -> Dict[str, Any]:
        return {
            "epsilon": format_rational(self.epsilon),
            "delta": format_rational(self.delta),
            "eta_coefficient": format_rational(self.eta_coefficient),
            "ladder_length": self.ladder_length,
            "c_star": format_rational(self.c_star),
            "gammas": [format_rational(g) for g in self.gammas],
            "conforming": self.profile.conforming,
        }


@dataclass(frozen=True)
class TupleResult:
    """
    Кортеж M_1, ..., M_K из теоремы о метастабильности (или промежуточного
    утверждения). entries заполняется только в точном режиме.
    """

    complexity: int
    epsilon: Fraction
    M: int
    count: int | None
    entries: Tuple[int, ...] | None = None
    N: int | None = None
    deferred: Dict[str, Any] | None = None
    conditional: bool = False

    @property
    def status(self) -> str:
        return "Exact" if self.deferred is None else "Deferred"

    def to_dict(self) -> Dict[str, Any]:
        report: Dict[str, Any] = {
            "complexity": self.complexity,
            "epsilon": format_rational(self.epsilon),
            "M": self.M,
            "status": self.status,
            "conditional": self.conditional,
        }
        if self.count is not None:
            report["count"] = str(self.count)
        if self.entries is not None:
            report["entries"] = [str(entry) for entry in self.entries]
        if self.N is not None:
            report["N"] = str(self.N)
        if self.deferred is not None:
            report["deferred"] = self.deferred
        return report


def ladder_values(ladder: List[LadderStep]) -> List[int]:
    return [step.M for step in ladder]
