from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from math import lcm
from typing import Any, Dict, List, Sequence, Tuple

import mpmath
import numpy as np
from django.core.exceptions import ValidationError

from folner.models import Element, FolnerSet
from nilgroup.models import PermElement
from nilgroup.services import GroupService
from utils.rationals import format_rational
from utils.validates import validate_permutation, validate_probability

# Наблюдаемая - вектор значений в точках X (dtype=object с Fraction либо float)
Observable = np.ndarray

Position = Tuple[int, int]


@dataclass(frozen=True)
class FiniteMPSpace:
    """
    Конечное вероятностное пространство X = {0, ..., size-1}
    """

    weights: Tuple[Fraction, ...]

    def __post_init__(self):
        validate_probability(self.weights)

    @classmethod
    def uniform(cls, size: int) -> "FiniteMPSpace":
        if size < 1:
            raise ValidationError("Пространство должно содержать хотя бы одну точку")
        return cls((Fraction(1, size),) * size)

    @property
    def size(self) -> int:
        return len(self.weights)

    @cached_property
    def weight_vector(self) -> np.ndarray:
        return np.array(self.weights, dtype=object)


@dataclass(frozen=True)
class ActionAssignment:
    """
    Действие UT(dim, Z) на X, заданное образами элементарных матриц E_ij(1).
    Оператор U_g f = f o p_g, p_{gh} = p_h o p_g; незаданные образующие действуют тождественно
    """

    space: FiniteMPSpace
    dim: int
    generators: Tuple[Tuple[Position, Tuple[int, ...]], ...]

    def __post_init__(self):
        positions = [position for position, _ in self.generators]
        if len(set(positions)) != len(positions):
            raise ValidationError("Образующая задана дважды")
        for (i, j), images in self.generators:
            if not 1 <= i < j <= self.dim:
                raise ValidationError(f"Некорректная образующая E_{i}{j} для UT({self.dim})")
            validate_permutation(images)
            if len(images) != self.space.size:
                raise ValidationError(f"Образ E_{i}{j} задан не на всем X")
            if any(self.space.weights[x] != self.space.weights[image] for x, image in enumerate(images)):
                raise ValidationError(f"Образующая E_{i}{j} не сохраняет меру")

    def images(self, position: Position) -> Tuple[int, ...]:
        for known, images in self.generators:
            if known == position:
                return images
        return tuple(range(self.space.size))

    @cached_property
    def orders(self) -> Dict[Position, int]:
        return {position: GroupService.order(PermElement(images)) for position, images in self.generators}

    @cached_property
    def period(self) -> int:
        """
        НОК порядков образующих
        """
        return lcm(1, *self.orders.values())

    @cached_property
    def power_tables(self) -> Dict[Position, Tuple[np.ndarray, ...]]:
        """
        Для каждой образующей все степени p_{E^e}, 0 <= e < порядок
        """
        tables = {}
        for position, images in self.generators:
            base = np.array(images, dtype=np.int64)
            powers = [np.arange(self.space.size, dtype=np.int64)]
            for _ in range(1, self.orders[position]):
                powers.append(base[powers[-1]])
            tables[position] = tuple(powers)
        return tables

    @cached_property
    def operator_cache(self) -> Dict[Tuple[int, ...], np.ndarray]:
        return {}


@dataclass(frozen=True)
class LimitResult:
    """
    Предел средних: точный (среднее по решетке периодов) либо приближенный
    (среднее по F_horizon, если решетка больше PERIOD_LATTICE_CAP)
    """

    values: Observable = field(compare=False)
    exact: bool
    period: int
    points: int


@dataclass(frozen=True)
class ScanRow:
    """
    Наихудшая пара (I, I') для данного M
    """

    M: int
    F_M: int
    N: int | None
    N2: int | None
    shift: str
    l2_squared: Fraction
    passed: bool

    HEADER = ("M", "F_M", "N", "N2", "shift", "l2_squared", "l2", "passed")

    def to_row(self) -> List[str]:
        return [
            str(self.M),
            str(self.F_M),
            "" if self.N is None else str(self.N),
            "" if self.N2 is None else str(self.N2),
            self.shift,
            format_rational(self.l2_squared),
            mpmath.nstr(mpmath.sqrt(mpmath.mpf(self.l2_squared.numerator) / self.l2_squared.denominator), 15),
            "1" if self.passed else "0",
        ]


@dataclass(frozen=True)
class ScanReport:
    bound: Fraction
    rows: Tuple[ScanRow, ...]
    shifts: Tuple[str, ...]
    filtered: bool = False

    @property
    def least_passing(self) -> int | None:
        return next((row.M for row in self.rows if row.passed), None)

    @property
    def all_passed(self) -> bool:
        return all(row.passed for row in self.rows)

    def summary(self) -> Dict[str, Any]:
        least = self.least_passing
        return {
            "bound": format_rational(self.bound),
            "windows": len(self.rows),
            "least_passing_M": least,
            "shifts": list(self.shifts),
            "ceil_filtered": self.filtered,
        }


@dataclass(frozen=True, eq=False)
class InverseWitness:
    """
    sigma = E_{m in F_N} prod_{i<j} U_{g_j(amb)^-1 g_i(amb)} b_i для I = a F_N b.
    correlation = <u, sigma> = ||Av_I[f_0, ..., f_{j-1}, u]||_2^2 / ||u||_inf
    """

    sigma: Observable
    b: Tuple[Observable, ...]
    I: FolnerSet
    correlation: Fraction
    threshold: Fraction
    av_norm_squared: Fraction
    u_sup: Fraction
    status: str = field(default="Witness", init=False)

    @property
    def passed(self) -> bool:
        return self.correlation > self.threshold


@dataclass(frozen=True)
class PremiseViolated:
    reason: str
    av_norm_squared: Fraction | None = None
    u_sup: Fraction | None = None
    status: str = field(default="PremiseViolated", init=False)


@dataclass(frozen=True, eq=False)
class ReducibilityCandidate:
    """
    Свидетель (J, a, b_0, ..., b_{j-1}) для одного пробного множества
    """

    label: str
    a: Element | None
    J: Tuple[Element, ...]
    b: Tuple[Observable, ...]


@dataclass(frozen=True)
class ReducibilityReport:
    """
    Проверка по конечному набору пробных множеств, а не по всем I
    """

    reducible: bool
    probes: Tuple[Tuple[str, str | None], ...]
    sampled: bool = True

    def to_dict(self) -> Dict[str, Any]:
        return {
            "reducible": self.reducible,
            "sampled": self.sampled,
            "probes": [{"probe": probe, "witness": label} for probe, label in self.probes],
        }


@dataclass(frozen=True, eq=False)
class DecompositionParams:
    """
    Параметры проверки f = sigma + u + v: delta, eta(x) = eta_coefficient / x,
    C-последовательность и конечные наборы атомов для ||.||_B и ||.||_A^*
    """

    delta: Fraction
    eta_coefficient: Fraction
    c_sequence: Tuple[Fraction, ...]
    atoms_structured: Tuple[Observable, ...]
    atoms_dual: Tuple[Observable, ...]
    m_sequence: Tuple[int, ...] = ()

    def eta(self, x: Fraction) -> Fraction:
        return self.eta_coefficient / Fraction(x)


@dataclass(frozen=True)
class DecompositionCheck:
    i: int
    sigma_norm: Fraction | float
    u_dual: Fraction
    v_norm_squared: Fraction
    sigma_ok: bool
    u_ok: bool
    v_ok: bool

    @property
    def passed(self) -> bool:
        return self.sigma_ok and self.u_ok and self.v_ok


@dataclass(frozen=True, eq=False)
class Truncation:
    """
    u 1_S и v + u 1_{S^c} для S = {|v| <= C}
    """

    u: Observable
    v: Observable
    support: np.ndarray
    u_sup: Fraction
    bound: Fraction

    @property
    def bounded(self) -> bool:
        return self.u_sup <= self.bound


def describe_shift(shift: Sequence[Element | None]) -> str:
    return "|".join("e" if s is None else ",".join(str(c) for c in s) for s in shift)
