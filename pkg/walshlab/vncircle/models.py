from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Tuple

import mpmath
from django.core.exceptions import ValidationError

from utils.rationals import format_rational
from utils.validates import validate_probability, validate_same_shape

REGION_A = "A"
REGION_B = "B"
REGION_E = "E"


@dataclass(frozen=True)
class AtomicMeasure:
    """
    Атомарная вероятностная мера на окружности.
    Атомы - точки exp(2 pi i theta) с рациональными углами theta в оборотах, 0 <= theta < 1
    """

    angles: Tuple[Fraction, ...]
    weights: Tuple[Fraction, ...]

    def __post_init__(self):
        validate_same_shape(len(self.angles), len(self.weights), "атомы и веса")
        validate_probability(self.weights)
        if any(not 0 <= theta < 1 for theta in self.angles):
            raise ValidationError("Углы атомов задаются в оборотах из [0, 1)")
        if len(set(self.angles)) != len(self.angles):
            raise ValidationError("Атомы меры должны быть различными")

    @classmethod
    def from_pairs(cls, pairs: Dict[Fraction, Fraction]) -> "AtomicMeasure":
        angles = tuple(sorted(pairs))
        return cls(angles, tuple(pairs[theta] for theta in angles))

    @property
    def size(self) -> int:
        return len(self.angles)

    def __str__(self):
        atoms = ", ".join(f"{format_rational(t)}:{format_rational(w)}" for t, w in zip(self.angles, self.weights))
        return f"mu[{atoms}]"


@dataclass(frozen=True)
class CircleObservable:
    """
    Значения f(lambda_k) на атомах меры
    """

    values: Tuple[mpmath.mpc, ...]

    def __len__(self):
        return len(self.values)

    def restrict(self, mask: List[bool]) -> "CircleObservable":
        return CircleObservable(tuple(v if keep else mpmath.mpc(0) for v, keep in zip(self.values, mask)))

    def __add__(self, other: "CircleObservable") -> "CircleObservable":
        return CircleObservable(tuple(a + b for a, b in zip(self.values, other.values, strict=True)))

    def __sub__(self, other: "CircleObservable") -> "CircleObservable":
        return CircleObservable(tuple(a - b for a, b in zip(self.values, other.values, strict=True)))


@dataclass(frozen=True)
class Regions:
    """
    A_M - открытый диск радиуса eps / (6 F(M)) вокруг 1, B_M - дополнение
    открытого диска радиуса 12 / (eps M), E_M - остальное. Расстояние хордовое, |1 - lambda|
    """

    epsilon: Fraction
    M: int
    F_M: int

    @property
    def a_radius(self) -> Fraction:
        return self.epsilon / (6 * self.F_M)

    @property
    def b_radius(self) -> Fraction:
        return Fraction(12) / (self.epsilon * self.M)


@dataclass(frozen=True)
class Decomposition:
    """
    f = sigma + u + v: sigma = f 1_A, u = f 1_B, v = f 1_E для M_i
    """

    i: int
    M: int
    sigma: CircleObservable
    u: CircleObservable
    v: CircleObservable
    v_norm: mpmath.mpf
    labels: Tuple[str, ...]


@dataclass(frozen=True)
class MetastabilityReport:
    i: int
    M: int
    F_M: int
    max_oscillation: mpmath.mpf
    passed: bool
    method: str


@dataclass(frozen=True)
class StabilityReport:
    n: int
    sup_difference: mpmath.mpf
    bound: mpmath.mpf
    passed: bool


@dataclass(frozen=True)
class SweepRow:
    case: int
    i: int
    max_oscillation: mpmath.mpf
    passed: bool
    method: str

    def to_row(self) -> List[str]:
        return [str(self.case), str(self.i), mpmath.nstr(self.max_oscillation, 12), "1" if self.passed else "0"]


@dataclass(frozen=True)
class SweepReport:
    epsilon: Fraction
    growth: str
    sequence: Tuple[int, ...]
    rows: Tuple[SweepRow, ...] = field(default_factory=tuple)

    @property
    def all_passed(self) -> bool:
        return all(row.passed for row in self.rows)

    def summary(self) -> Dict[str, Any]:
        return {
            "epsilon": format_rational(self.epsilon),
            "growth": self.growth,
            "K": len(self.sequence),
            "cases": len(self.rows),
            "passed": sum(1 for row in self.rows if row.passed),
        }
