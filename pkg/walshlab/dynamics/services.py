import logging
import math
from collections import Counter
from fractions import Fraction
from itertools import combinations, product
from math import factorial
from typing import Dict, Iterable, List, Mapping, Sequence, Tuple

import numpy as np
import sympy
from django.conf import settings
from django.core.exceptions import ValidationError
from sympy.solvers.simplex import InfeasibleLPError, linprog

from dynamics.models import (
    ActionAssignment,
    DecompositionCheck,
    DecompositionParams,
    FiniteMPSpace,
    InverseWitness,
    LimitResult,
    Observable,
    Position,
    PremiseViolated,
    ReducibilityCandidate,
    ReducibilityReport,
    ScanReport,
    ScanRow,
    Truncation,
    describe_shift,
)
from folner.models import Element, FolnerSet
from folner.services import FolnerService
from nilgroup.models import UTElement
from nilgroup.services import CoordinateService, GroupService, peel_order
from polymap.models import PolyMap
from polymap.services import PolyMapService
from rates.models import CONFORMING, GrowthFunction, RateProfile
from rates.services import GrowthService, RateService
from systems.models import System
from systems.services import SystemService
from utils.exceptions import SearchCapExceeded, WalshlabError
from utils.parallel import parallel_map
from utils.validates import validate_positive, validate_same_shape

logger = logging.getLogger(__name__)

Bindings = Dict[str, Sequence[int]] | None
Shift = Tuple[Element | None, Element | None]


class ObservableService:
    """
    Функции на конечном X. Точный режим - массивы Fraction (dtype=object),
    режим с плавающей точкой сравнивает с допуском DYNAMICS_FLOAT_TOLERANCE
    """

    @staticmethod
    def make(space: FiniteMPSpace, values: Sequence, exact: bool = True) -> Observable:
        validate_same_shape(len(values), space.size, "наблюдаемая и X")
        if exact:
            return np.array([Fraction(v) for v in values], dtype=object)
        return np.array([float(Fraction(v)) for v in values], dtype=float)

    @staticmethod
    def is_exact(f: Observable) -> bool:
        return f.dtype == object

    @classmethod
    def constant(cls, space: FiniteMPSpace, value, exact: bool = True) -> Observable:
        return cls.make(space, [value] * space.size, exact)

    @classmethod
    def indicator(cls, space: FiniteMPSpace, points: Iterable[int], exact: bool = True) -> Observable:
        points = set(points)
        return cls.make(space, [int(x in points) for x in range(space.size)], exact)

    @classmethod
    def zeros_like(cls, f: Observable) -> Observable:
        if cls.is_exact(f):
            return np.full(f.shape, Fraction(0), dtype=object)
        return np.zeros(f.shape, dtype=float)

    @classmethod
    def scale(cls, f: Observable, c) -> Observable:
        return f * (Fraction(c) if cls.is_exact(f) else float(c))

    @classmethod
    def random(cls, rng: np.random.Generator, space: FiniteMPSpace, denominator: int = 8,
               exact: bool = True) -> Observable:
        """
        Случайная функция со значениями k / denominator из [-1, 1]
        """
        numerators = rng.integers(-denominator, denominator + 1, size=space.size)
        return cls.make(space, [Fraction(int(k), denominator) for k in numerators], exact)

    @classmethod
    def inner(cls, space: FiniteMPSpace, f: Observable, g: Observable):
        """
        <f, g> = sum_x mu(x) f(x) g(x)
        """
        validate_same_shape(len(f), space.size, "наблюдаемая и X")
        validate_same_shape(len(g), space.size, "наблюдаемая и X")
        weights = space.weight_vector if cls.is_exact(f) else space.weight_vector.astype(float)
        return np.dot(weights, f * g)

    @classmethod
    def norm2_squared(cls, space: FiniteMPSpace, f: Observable):
        return cls.inner(space, f, f)

    @staticmethod
    def sup_norm(f: Observable):
        return np.abs(f).max()

    @classmethod
    def equal(cls, f: Observable, g: Observable) -> bool:
        if len(f) != len(g):
            return False
        if cls.is_exact(f) and cls.is_exact(g):
            return bool(np.all(f == g))
        return bool(np.allclose(f.astype(float), g.astype(float), rtol=0, atol=settings.DYNAMICS_FLOAT_TOLERANCE))


class ActionService:
    """
    Действие UT(dim, Z) перестановками X и операторы U_g f = f o p_g
    """

    @classmethod
    def build(cls, space: FiniteMPSpace, dim: int, generators: Mapping[Position, Sequence[int]]) -> ActionAssignment:
        action = ActionAssignment(
            space,
            dim,
            tuple(sorted((tuple(position), tuple(int(x) for x in images)) for position, images in generators.items())),
        )
        cls.check_relations(action)
        logger.debug(f"Действие UT({dim}) на |X| = {space.size}, образующих - {len(action.generators)}")
        return action

    @staticmethod
    def _power(action: ActionAssignment, position: Position, exponent: int) -> np.ndarray:
        table = action.power_tables.get(position)
        if table is None:
            return np.arange(action.space.size, dtype=np.int64)
        return table[exponent % len(table)]

    @classmethod
    def check_relations(cls, action: ActionAssignment) -> None:
        """
        [E_ij, E_jk] = E_ik, [E_ij, E_ki] = E_kj^-1, остальные пары коммутируют.
        Коммутатор [A, B] = A^-1 B^-1 A B, правое действие: x.(gh) = (x.g).h
        """
        identity = np.arange(action.space.size, dtype=np.int64)
        positions = [(i, j) for i in range(1, action.dim + 1) for j in range(i + 1, action.dim + 1)]
        for A, B in combinations(positions, 2):
            (i, j), (k, l) = A, B
            images = identity
            for position, exponent in ((A, -1), (B, -1), (A, 1), (B, 1)):
                images = cls._power(action, position, exponent)[images]
            if j == k:
                expected = cls._power(action, (i, l), 1)
            elif l == i:
                expected = cls._power(action, (k, j), -1)
            else:
                expected = identity
            if not np.array_equal(images, expected):
                logger.error(f"Образующие E_{i}{j} и E_{k}{l} нарушают соотношения UT({action.dim})")
                raise ValidationError(f"Соотношение для [E_{i}{j}, E_{k}{l}] не выполнено")

    @classmethod
    def operator(cls, action: ActionAssignment, g: UTElement) -> np.ndarray:
        """
        Перестановка p_g: g = prod E_ij^{e_ij} в порядке peel_order, p_{gh} = p_h o p_g
        """
        validate_same_shape(g.dim, action.dim, "элемент и действие")
        exponents = CoordinateService.coordinates(g)
        factors = [
            ((i + 1, j + 1), e % action.orders[(i + 1, j + 1)])
            for (i, j), e in zip(peel_order(g.dim), exponents)
            if (i + 1, j + 1) in action.orders
        ]
        key = tuple(e for _, e in factors)
        cache = action.operator_cache
        if key not in cache:
            images = np.arange(action.space.size, dtype=np.int64)
            for position, e in factors:
                if e:
                    images = action.power_tables[position][e][images]
            cache[key] = images
        return cache[key]

    @classmethod
    def apply(cls, action: ActionAssignment, g: UTElement, f: Observable) -> Observable:
        return f[cls.operator(action, g)]

    @classmethod
    def rotation(cls, q: int) -> ActionAssignment:
        """
        Поворот Z_q: E_12 действует как x -> x + 1
        """
        validate_positive(q, "q")
        return cls.build(FiniteMPSpace.uniform(q), 2, {(1, 2): [(x + 1) % q for x in range(q)]})

    @classmethod
    def heisenberg(cls, q: int) -> ActionAssignment:
        """
        Правые сдвиги на H_3(Z_q), точка (x, y, z) имеет номер x q^2 + y q + z
        """
        validate_positive(q, "q")

        def index(x: int, y: int, z: int) -> int:
            return (x % q) * q * q + (y % q) * q + z % q

        points = list(product(range(q), repeat=3))
        return cls.build(
            FiniteMPSpace.uniform(q ** 3),
            3,
            {
                (1, 2): [index(x + 1, y, z) for x, y, z in points],
                (2, 3): [index(x, y + 1, z + x) for x, y, z in points],
                (1, 3): [index(x, y, z + 1) for x, y, z in points],
            },
        )

    @classmethod
    def commuting(cls, space: FiniteMPSpace, shifts: Sequence[Sequence[int]]) -> ActionAssignment:
        """
        Коммутирующие T_1, ..., T_l через блочное вложение Z^l в UT(2l): E_{2k-1,2k} -> T_k
        """
        if not shifts:
            raise ValidationError("Нужна хотя бы одна перестановка")
        return cls.build(space, 2 * len(shifts), {(2 * k + 1, 2 * k + 2): T for k, T in enumerate(shifts)})

    @classmethod
    def torus(cls, q: int, l: int) -> ActionAssignment:
        """
        Сдвиги по координатам Z_q^l
        """
        validate_positive(q, "q")
        validate_positive(l, "l")
        points = list(product(range(q), repeat=l))
        index = {point: k for k, point in enumerate(points)}
        shifts = [
            [index[point[:c] + ((point[c] + 1) % q,) + point[c + 1:]] for point in points]
            for c in range(l)
        ]
        return cls.commuting(FiniteMPSpace.uniform(len(points)), shifts)


class AverageService:
    """
    Кратные эргодические средние Av_I[f_0, ..., f_j] = E_{n in I} prod g_i(n) f_i
    """

    @staticmethod
    def _check(action: ActionAssignment, s: System, fs: Sequence[Observable]) -> None:
        validate_same_shape(s.dim, action.dim, "система и действие")
        validate_same_shape(len(fs), s.j + 1, "число функций и длина системы")
        for f in fs:
            validate_same_shape(len(f), action.space.size, "наблюдаемая и X")

    @staticmethod
    def group_operators(action: ActionAssignment, points: Iterable[Element],
                 elements) -> Tuple[Counter, Dict[bytes, List[np.ndarray]]]:
        """
        Точки n группируются по набору перестановок, elements(n) - список элементов UT
        """
        counts: Counter = Counter()
        operators: Dict[bytes, List[np.ndarray]] = {}
        for n in points:
            perms = [ActionService.operator(action, g) for g in elements(n)]
            key = b"".join(p.tobytes() for p in perms)
            counts[key] += 1
            operators.setdefault(key, perms)
        return counts, operators

    @staticmethod
    def combine(counts: Counter, operators: Dict[bytes, List[np.ndarray]], fs: Sequence[Observable]) -> Observable:
        total = sum(counts.values())
        if not total:
            raise ValidationError("Среднее по пустому множеству не определено")
        result = ObservableService.zeros_like(fs[0])
        for key, count in counts.items():
            term = fs[0][operators[key][0]]
            for f, p in zip(fs[1:], operators[key][1:]):
                term = term * f[p]
            result = result + count * term
        return result / total

    @classmethod
    def average_over(cls, action: ActionAssignment, s: System, points: Iterable[Element], fs: Sequence[Observable],
                     bindings: Bindings = None) -> Observable:
        cls._check(action, s, fs)
        counts, operators = cls.group_operators(
            action, points, lambda n: [PolyMapService.evaluate(g, n, bindings) for g in s.maps]
        )
        return cls.combine(counts, operators, fs)

    @classmethod
    def av(cls, action: ActionAssignment, s: System, I: FolnerSet, fs: Sequence[Observable],
           bindings: Bindings = None) -> Observable:
        if I.model != s.model:
            raise ValidationError(f"Множество {I} лежит не в области системы {s.model}")
        logger.debug(f"Av по {I}, j = {s.j}")
        points = FolnerService.translate_points(I.model, I.canonical(), I.a, I.b)
        return cls.average_over(action, s, points, fs, bindings)

    @classmethod
    def av_diff(cls, action: ActionAssignment, s: System, I: FolnerSet, I2: FolnerSet, fs: Sequence[Observable],
                bindings: Bindings = None) -> Observable:
        return cls.av(action, s, I, fs, bindings) - cls.av(action, s, I2, fs, bindings)

    @staticmethod
    def lattice_period(action: ActionAssignment, s: System) -> int:
        """
        Координаты g_i(n) - целозначные многочлены степени <= D = (dim - 1) max deg g_i,
        поэтому n -> U_{g_i(n)} периодично с периодом Q D! по каждой координате
        """
        degree = max(PolyMapService.n_degree(g) for g in s.maps)
        return action.period * factorial((action.dim - 1) * degree)

    @classmethod
    def limit_oracle(cls, action: ActionAssignment, s: System, fs: Sequence[Observable], horizon: int = 64,
                     bindings: Bindings = None) -> LimitResult:
        """
        Предел Av_I при floor(I) -> бесконечности: среднее по решетке периодов [0, P)^r
        """
        cls._check(action, s, fs)
        period = cls.lattice_period(action, s)
        size = period ** s.model.arity
        if size <= settings.PERIOD_LATTICE_CAP:
            values = cls.average_over(action, s, product(range(period), repeat=s.model.arity), fs, bindings)
            logger.info(f"Точный предел по решетке периодов {period}^{s.model.arity}")
            return LimitResult(values, True, period, size)

        logger.warning(f"Решетка периодов {period}^{s.model.arity} больше {settings.PERIOD_LATTICE_CAP}, "
                       f"используется среднее по F_{horizon}")
        I = FolnerSet(s.model, horizon)
        return LimitResult(cls.av(action, s, I, fs, bindings), False, period, FolnerService.measure(I))

    @classmethod
    def _pair_scan(cls, action: ActionAssignment, s: System, fs: Sequence[Observable], bound: Fraction,
                   F: GrowthFunction, M_window: Iterable[int], shifts: Sequence[Shift], gamma: Fraction | None,
                   bindings: Bindings) -> ScanReport:
        """
        Для каждого M - наихудшая пара I = a F_N b, I' = a' F_N' b' с M <= N, N' <= F(M)
        по окну сдвигов; при заданном gamma учитываются только пары с [I, I']_gamma <= F(M)
        """
        cls._check(action, s, fs)
        model = s.model
        F = GrowthService.at_least_identity(F)
        shifts = list(shifts) or [(None, None)]
        window = [(M, F(M)) for M in M_window]

        needed = sorted({(N, k) for M, F_M in window for N in range(M, F_M + 1) for k in range(len(shifts))})
        values = parallel_map(
            lambda item: cls.av(action, s, FolnerSet(model, item[0], *shifts[item[1]]), fs, bindings), needed
        )
        averages = dict(zip(needed, values))
        ceilings: Dict[Tuple[Tuple[int, int], Tuple[int, int]], int | None] = {}

        def ceiling(left: Tuple[int, int], right: Tuple[int, int]) -> int | None:
            if (left, right) not in ceilings:
                try:
                    ceilings[(left, right)] = FolnerService.ceil(
                        FolnerSet(model, left[0], *shifts[left[1]]), FolnerSet(model, right[0], *shifts[right[1]]), gamma
                    ).n0
                except SearchCapExceeded:
                    logger.warning(f"[I, I']_{gamma} не вычислено для пары {left}, {right}, пара пропущена")
                    ceilings[(left, right)] = None
            return ceilings[(left, right)]

        rows = []
        for M, F_M in window:
            items = [(N, k) for N in range(M, F_M + 1) for k in range(len(shifts))]
            worst, pair = Fraction(0), None
            for left, right in combinations(items, 2):
                if gamma is not None:
                    n0 = ceiling(left, right)
                    if n0 is None or n0 > F_M:
                        continue
                value = Fraction(ObservableService.norm2_squared(action.space, averages[left] - averages[right]))
                if pair is None or value > worst:
                    worst, pair = value, (left, right)
            passed = worst < bound ** 2
            if pair is None:
                rows.append(ScanRow(M, F_M, None, None, "", worst, passed))
            else:
                (N, k), (N2, k2) = pair
                shift = f"{describe_shift(shifts[k])};{describe_shift(shifts[k2])}"
                rows.append(ScanRow(M, F_M, N, N2, shift, worst, passed))

        return ScanReport(Fraction(bound), tuple(rows), tuple(describe_shift(shift) for shift in shifts), gamma is not None)

    @classmethod
    def metastability_scan(cls, action: ActionAssignment, s: System, fs: Sequence[Observable], epsilon: Fraction,
                           F: GrowthFunction, M_window: Iterable[int], shifts: Sequence[Shift] = (),
                           gamma: Fraction | None = None, bindings: Bindings = None) -> ScanReport:
        """
        ||Av_{I, I'}[f_0, ..., f_j]||_2 < epsilon для всех пар из окна
        """
        validate_positive(epsilon, "epsilon")
        if any(ObservableService.sup_norm(f) > 1 for f in fs):
            raise ValidationError("Ожидались функции с ||f_i||_inf <= 1")
        logger.debug(f"Сканирование метастабильности: eps = {epsilon}, F = {F}")
        report = cls._pair_scan(action, s, fs, Fraction(epsilon), F, M_window, shifts, gamma, bindings)
        if report.least_passing is None:
            logger.warning(f"Окно исчерпано, ни одно M не прошло при eps = {epsilon}")
        else:
            logger.info(f"Наименьшее подходящее M = {report.least_passing}")
        return report

    @classmethod
    def structured_oscillation_check(cls, action: ActionAssignment, s: System, fs: Sequence[Observable],
                                     sigma: Observable, gamma: Fraction, F: GrowthFunction,
                                     M_window: Iterable[int], shifts: Sequence[Shift] = (),
                                     bindings: Bindings = None) -> ScanReport:
        """
        Колебание Av[f_0, ..., f_{j-1}, sigma] для приводимой sigma сравнивается с 8 gamma
        """
        validate_positive(gamma, "gamma")
        if ObservableService.sup_norm(sigma) > 1:
            raise ValidationError("Ожидалась sigma с ||sigma||_inf <= 1")
        report = cls._pair_scan(action, s, list(fs) + [sigma], 8 * Fraction(gamma), F, M_window, shifts, None,
                                bindings)
        failures = [row.M for row in report.rows if not row.passed]
        if failures:
            logger.warning(f"Колебание не меньше 8 gamma при M = {failures}")
        else:
            logger.info(f"Колебание меньше 8 gamma = {8 * gamma} во всем окне")
        return report

    @classmethod
    def commuting_actions_average(cls, action: ActionAssignment, actions: Sequence[PolyMap], fs: Sequence[Observable],
                                  I: FolnerSet, bindings: Bindings = None) -> Observable:
        """
        E_{m in I} f_0 tau_1(m) f_1 ... tau_1(m)...tau_j(m) f_j через систему накопленных произведений
        """
        return cls.av(action, SystemService.commuting_actions_system(actions), I, fs, bindings)


class SigmaService:
    """
    Атомарная норма ||f||_Sigma и двойственная sup_t |<f, sigma_t>|
    """

    @staticmethod
    def _rational(value) -> sympy.Rational:
        value = Fraction(value)
        return sympy.Rational(value.numerator, value.denominator)

    @classmethod
    def sigma_norm(cls, space: FiniteMPSpace, f: Observable, atoms: Sequence[Observable]) -> Fraction | float:
        """
        inf { sum |lambda_t| : f = sum lambda_t sigma_t } как задача ЛП в стандартной форме:
        lambda_t = p_t - q_t, p_t, q_t >= 0, min sum (p_t + q_t) при равенстве в каждой точке X.
        Вне линейной оболочки атомов - math.inf
        """
        validate_same_shape(len(f), space.size, "наблюдаемая и X")
        for atom in atoms:
            validate_same_shape(len(atom), space.size, "атом и X")
        if not atoms:
            return Fraction(0) if not any(f) else math.inf

        count = len(atoms)
        rows, rhs = [], []
        for x in range(space.size):
            row = [cls._rational(atoms[t][x]) for t in range(count)]
            value = cls._rational(f[x])
            if not any(row):
                if value != 0:
                    logger.debug(f"f({x}) != 0 при нулевых атомах в точке {x}")
                    return math.inf
                continue
            rows.append(row + [-entry for entry in row])
            rhs.append(value)
        if not rows:
            return Fraction(0)

        try:
            optimum, point = linprog(
                sympy.Matrix([[1] * (2 * count)]), A_eq=sympy.Matrix(rows), b_eq=sympy.Matrix(rhs)
            )
        except InfeasibleLPError:
            logger.debug("f вне линейной оболочки атомов")
            return math.inf
        point = [sympy.Rational(value) for value in point]
        if optimum < 0 or any(value < 0 for value in point) or sum(point) != optimum:
            logger.error(f"Симплекс вернул недопустимую точку: {optimum}, {point}")
            raise WalshlabError("Решение задачи для ||f||_Sigma нарушает ограничения")
        for row, value in zip(rows, rhs):
            if sum((a * p for a, p in zip(row, point)), sympy.Integer(0)) != value:
                logger.error(f"Симплекс вернул точку вне f = sum lambda_t sigma_t: {point}")
                raise WalshlabError("Решение задачи для ||f||_Sigma нарушает равенства")
        optimum = sympy.Rational(optimum)
        return Fraction(int(optimum.p), int(optimum.q))

    @staticmethod
    def sigma_dual(space: FiniteMPSpace, f: Observable, atoms: Sequence[Observable]):
        return max((abs(ObservableService.inner(space, f, atom)) for atom in atoms), default=Fraction(0))


class InverseService:
    """
    Обратная теорема: по большому среднему с последней функцией u строится
    приводимая sigma с <u, sigma> > 2 eta(C)
    """

    @staticmethod
    def _witness_average(action: ActionAssignment, s: System, points: Iterable[Element], b: Sequence[Observable],
                         prefix: UTElement | None = None, bindings: Bindings = None) -> Observable:
        """
        E_{n in points} prod_{i<j} U_{h g_j(n)^-1 g_i(n)} b_i, h = prefix
        """
        def elements(n: Element) -> List[UTElement]:
            values = [PolyMapService.evaluate(g, n, bindings) for g in s.maps]
            back = GroupService.inv(values[-1])
            if prefix is not None:
                back = GroupService.mul(prefix, back)
            return [GroupService.mul(back, g) for g in values[:-1]]

        counts, operators = AverageService.group_operators(action, points, elements)
        return AverageService.combine(counts, operators, b)

    @classmethod
    def inverse_witness(cls, action: ActionAssignment, s: System, I: FolnerSet, fs: Sequence[Observable],
                        u: Observable, C: Fraction, epsilon: Fraction,
                        bindings: Bindings = None) -> InverseWitness | PremiseViolated:
        """
        b_0 = Av_I[f_0, ..., f_{j-1}, u] f_0 / ||u||_inf, b_i = f_i,
        sigma = E_{m in F_N} prod_{i<j} U_{g_j(amb)^-1 g_i(amb)} b_i для I = a F_N b
        """
        validate_positive(C, "C")
        validate_positive(epsilon, "epsilon")
        if s.j < 1:
            raise ValidationError("Обратная теорема требует j >= 1")
        validate_same_shape(len(fs), s.j, "число функций f_0, ..., f_{j-1}")
        space = action.space
        logger.debug(f"Свидетель обратной теоремы: {I}, C = {C}, eps = {epsilon}")

        u_sup = Fraction(ObservableService.sup_norm(u))
        if u_sup > 3 * Fraction(C):
            logger.warning(f"||u||_inf = {u_sup} больше 3C")
            return PremiseViolated("||u||_inf > 3C", None, u_sup)
        if any(ObservableService.sup_norm(f) > 1 for f in fs):
            logger.warning("Среди f_i есть функция с ||f_i||_inf > 1")
            return PremiseViolated("||f_i||_inf > 1", None, u_sup)

        average = AverageService.av(action, s, I, list(fs) + [u], bindings)
        av_norm = Fraction(ObservableService.norm2_squared(space, average))
        if av_norm <= Fraction(epsilon) ** 2 / 36:
            logger.warning(f"||Av||_2^2 = {av_norm} не больше eps^2/36")
            return PremiseViolated("||Av||_2 <= eps/6", av_norm, u_sup)

        b = (ObservableService.scale(average * fs[0], 1 / u_sup),) + tuple(fs[1:])
        model = I.model
        points = FolnerService.translate_points(model, FolnerSet(model, I.N).canonical(), I.a, I.b)
        sigma = cls._witness_average(action, s, points, b, bindings=bindings)

        correlation = Fraction(ObservableService.inner(space, u, sigma))
        expected = av_norm / u_sup
        if ObservableService.is_exact(sigma) and correlation != expected:
            logger.error(f"<u, sigma> = {correlation} не совпало с ||Av||^2/||u|| = {expected}")
            raise WalshlabError("correlation identity failed")
        threshold = 2 * RateService.eta(Fraction(epsilon), Fraction(C))
        witness = InverseWitness(sigma, b, I, correlation, threshold, av_norm, u_sup)
        if witness.passed:
            logger.info(f"<u, sigma> = {correlation} > 2 eta(C) = {threshold}")
        else:
            logger.warning(f"<u, sigma> = {correlation} не больше 2 eta(C) = {threshold}")
        return witness

    @staticmethod
    def zero_candidate(action: ActionAssignment, s: System) -> ReducibilityCandidate:
        zero = np.full(action.space.size, Fraction(0), dtype=object)
        return ReducibilityCandidate("zero", None, (s.model.identity(),), (zero,) * s.j)

    @staticmethod
    def canonical_candidate(witness: InverseWitness, probe: FolnerSet) -> ReducibilityCandidate:
        """
        Для I = a F_N b и пробного множества a~ F_L b~: J = b~^-1 F_N b, a' = a a~^-1,
        так что a' l m' = a k m b при l = a~ k b~, m' = b~^-1 m b
        """
        model = probe.model
        base = witness.I
        a = model.mul(base.left, model.inv(probe.left))
        J = tuple(FolnerService.translate_points(model, FolnerSet(model, base.N).canonical(), model.inv(probe.right),
                                                 base.right))
        return ReducibilityCandidate("inverse", a, J, witness.b)

    @classmethod
    def check_candidate(cls, sigma: Observable, action: ActionAssignment, s: System, gamma: Fraction,
                        probe: FolnerSet, candidate: ReducibilityCandidate, bindings: Bindings = None) -> bool:
        """
        ||U_{g_j(l)} sigma - E_{m in J} prod U_{g_j(l) g_j(alm)^-1 g_i(alm)} b_i||_inf < gamma для всех l из I
        """
        validate_same_shape(len(candidate.b), s.j, "число функций b_i")
        if any(ObservableService.sup_norm(b) > 1 for b in candidate.b):
            raise ValidationError(f"У свидетеля {candidate.label} есть b_i с ||b_i||_inf > 1")
        model = probe.model
        a = candidate.a if candidate.a is not None else model.identity()
        for l in FolnerService.translate_points(model, probe.canonical(), probe.a, probe.b):
            top = PolyMapService.evaluate(s.maps[-1], l, bindings)
            left = ActionService.apply(action, top, sigma)
            points = [model.mul(model.mul(a, l), m) for m in candidate.J]
            right = cls._witness_average(action, s, points, candidate.b, top, bindings)
            if ObservableService.sup_norm(left - right) >= gamma:
                return False
        return True

    @classmethod
    def is_reducible(cls, sigma: Observable, action: ActionAssignment, s: System, gamma: Fraction, N: int,
                     probes: Sequence[FolnerSet], witness: InverseWitness | None = None,
                     candidates: Sequence[ReducibilityCandidate] = (), bindings: Bindings = None) -> ReducibilityReport:
        """
        Равномерная (g, gamma, N)-приводимость на конечном наборе пробных множеств.
        Свидетели: нулевой, построенный обратной теоремой и переданные явно
        """
        validate_positive(gamma, "gamma")
        if s.j < 1:
            raise ValidationError("Приводимость определена для j >= 1")
        if ObservableService.sup_norm(sigma) > 1:
            logger.error("||sigma||_inf > 1")
            raise ValidationError("Ожидалась sigma с ||sigma||_inf <= 1")
        for probe in probes:
            if probe.model != s.model:
                raise ValidationError(f"Пробное множество {probe} лежит не в {s.model}")
            phi = FolnerService.phi(s.model, Fraction(gamma), probe.floor).N
            if phi > N:
                logger.error(f"phi_{gamma}({probe.floor}) = {phi} > N = {N}")
                raise ValidationError(f"Пробное множество {probe} не удовлетворяет phi_gamma(floor(I)) <= N")

        verdicts = []
        for probe in probes:
            family = [cls.zero_candidate(action, s)]
            if witness is not None:
                family.append(cls.canonical_candidate(witness, probe))
            family.extend(candidates)
            label = next(
                (c.label for c in family if cls.check_candidate(sigma, action, s, Fraction(gamma), probe, c, bindings)),
                None,
            )
            verdicts.append((str(probe), label))

        reducible = all(label is not None for _, label in verdicts)
        logger.info(f"Приводимость на {len(verdicts)} пробных множествах: {reducible}")
        return ReducibilityReport(reducible, tuple(verdicts))


class DecompositionService:
    """
    Проверки разложения f = sigma + u + v и разделяющего функционала
    """

    @staticmethod
    def params_from_rates(epsilon: Fraction, atoms_structured: Sequence[Observable], atoms_dual: Sequence[Observable],
                          profile: RateProfile = CONFORMING, m_sequence: Sequence[int] = ()) -> DecompositionParams:
        """
        delta = eps/36, eta(x) = eps^2 / (216 x) и C-последовательность из rates
        """
        epsilon = Fraction(epsilon)
        return DecompositionParams(
            RateService.delta(epsilon, profile),
            epsilon ** 2 / 216,
            tuple(RateService.c_sequence(epsilon, profile)),
            tuple(atoms_structured),
            tuple(atoms_dual),
            tuple(m_sequence),
        )

    @staticmethod
    def truncate_pseudorandom(u: Observable, v: Observable, C: Fraction) -> Truncation:
        """
        S = {|v| <= C}: u -> u 1_S, v -> v + u 1_{S^c}. Если ||f||_inf <= 1 и ||sigma||_inf <= C,
        то ||u 1_S||_inf <= 3C при C >= 1
        """
        validate_positive(C, "C")
        validate_same_shape(len(u), len(v), "u и v")
        support = np.array([abs(x) <= C for x in v], dtype=bool)
        zeros = ObservableService.zeros_like(u)
        bounded = np.where(support, u, zeros)
        rest = v + np.where(support, zeros, u)
        return Truncation(bounded, rest, support, Fraction(ObservableService.sup_norm(bounded)), 3 * Fraction(C))

    @staticmethod
    def verify_decomposition(space: FiniteMPSpace, f: Observable, sigma: Observable, u: Observable, v: Observable,
                             i: int, params: DecompositionParams) -> DecompositionCheck:
        """
        ||sigma||_B < C_i, ||u||_A^* < eta(C_i), ||v||_2 < delta
        """
        if not ObservableService.equal(f, sigma + u + v):
            logger.error("Разложение не сходится: f != sigma + u + v")
            raise ValidationError("Ожидалось f = sigma + u + v")
        if not 1 <= i <= len(params.c_sequence):
            raise ValidationError(f"Индекс i = {i} вне C-последовательности длины {len(params.c_sequence)}")
        C = params.c_sequence[i - 1]
        logger.debug(f"Проверка разложения при i = {i}, C_i = {C}")

        sigma_norm = SigmaService.sigma_norm(space, sigma, params.atoms_structured)
        u_dual = Fraction(SigmaService.sigma_dual(space, u, params.atoms_dual))
        v_norm = Fraction(ObservableService.norm2_squared(space, v))
        check = DecompositionCheck(
            i, sigma_norm, u_dual, v_norm, sigma_norm < C, u_dual < params.eta(C), v_norm < params.delta ** 2
        )
        if check.passed:
            logger.info(f"Разложение проходит при i = {i}")
        else:
            logger.warning(f"Разложение не проходит при i = {i}: {check}")
        return check

    @staticmethod
    def separation_verify(space: FiniteMPSpace, f: Observable, phi: Observable, samples: Sequence[Sequence[Observable]],
                          c: Sequence[Fraction]) -> bool:
        """
        <f, phi> >= 1 и <v, phi> < 1 / c_i для всех v из выборки V_i
        """
        validate_same_shape(len(samples), len(c), "выборки V_i и c_i")
        for value in c:
            validate_positive(value, "c_i")
        if ObservableService.inner(space, f, phi) < 1:
            logger.info("<f, phi> < 1")
            return False
        for index, (sample, value) in enumerate(zip(samples, c), start=1):
            for v in sample:
                if ObservableService.inner(space, v, phi) >= 1 / Fraction(value):
                    logger.info(f"Функционал не отделяет V_{index}")
                    return False
        return True
