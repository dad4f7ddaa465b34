import logging
from bisect import bisect_left
from fractions import Fraction
from typing import List, Sequence, Tuple

import mpmath
import numpy as np
from django.conf import settings
from django.core.exceptions import ValidationError

from rates.models import GrowthFunction
from rates.services import GrowthService
from utils.exceptions import PrecisionAmbiguityError
from utils.parallel import parallel_map
from utils.validates import validate_positive, validate_same_shape
from vncircle.models import (
    REGION_A,
    REGION_B,
    REGION_E,
    AtomicMeasure,
    CircleObservable,
    Decomposition,
    MetastabilityReport,
    Regions,
    StabilityReport,
    SweepReport,
    SweepRow,
)

logger = logging.getLogger(__name__)

# |1 - exp(2 pi i theta)|^2 для углов, при которых хорда рациональна в квадрате
EXACT_CHORD_SQUARES = {1: {0: Fraction(0)}, 2: {1: Fraction(4)}, 3: {1: Fraction(3), 2: Fraction(3)},
                       4: {1: Fraction(2), 3: Fraction(2)}, 6: {1: Fraction(1), 5: Fraction(1)}}

Chord = Tuple[Fraction | None, mpmath.mpf]


def precision():
    return mpmath.workprec(settings.VN_PRECISION_BITS)


def to_mpf(value: Fraction) -> mpmath.mpf:
    return mpmath.mpf(value.numerator) / value.denominator


class CircleService:
    """
    Мультипликатор U f(lambda) = lambda f(lambda) на L^2 атомарной меры
    """

    @staticmethod
    def margin() -> mpmath.mpf:
        return mpmath.mpf(settings.VN_MARGIN)

    @staticmethod
    def chord(theta: Fraction) -> Chord:
        """
        |1 - lambda| = 2 |sin(pi theta)|, точный квадрат - если он рационален
        """
        exact = EXACT_CHORD_SQUARES.get(theta.denominator, {}).get(theta.numerator % theta.denominator)
        return exact, 2 * abs(mpmath.sinpi(to_mpf(theta)))

    @classmethod
    def compare_chord(cls, chord: Chord, radius: Fraction) -> int:
        """
        Знак |1 - lambda| - radius. Неразличимые при текущей точности значения
        (относительная разница меньше VN_MARGIN) дают PrecisionAmbiguityError
        """
        exact, value = chord
        if exact is not None:
            square = radius * radius
            return (exact > square) - (exact < square)
        bound = to_mpf(radius)
        if abs(value - bound) <= cls.margin() * max(value, bound):
            logger.error(f"Хорда {value} неотличима от радиуса {radius}")
            raise PrecisionAmbiguityError(f"chord vs radius {radius} is ambiguous at current precision")
        return 1 if value > bound else -1

    @staticmethod
    def mean_factor(theta: Fraction, N: int) -> mpmath.mpc:
        """
        (1/N) sum_{n=1}^N lambda^n = exp(pi i (N+1) theta) sin(pi N theta) / (N sin(pi theta)), 1 при lambda = 1
        """
        if theta % 1 == 0:
            return mpmath.mpc(1)
        phase = to_mpf(((N + 1) * theta) % 2)
        return mpmath.expjpi(phase) * mpmath.sinpi(to_mpf((N * theta) % 2)) / (N * mpmath.sinpi(to_mpf(theta)))

    @classmethod
    def ergodic_avg(cls, f: CircleObservable, mu: AtomicMeasure, N: int) -> CircleObservable:
        """
        a_N = (1/N) sum_{n=1}^N U^n f
        """
        validate_positive(N, "N")
        validate_same_shape(len(f), mu.size, "наблюдаемая и мера")
        with precision():
            return CircleObservable(tuple(v * cls.mean_factor(theta, N) for v, theta in zip(f.values, mu.angles)))

    @staticmethod
    def ergodic_avg_direct(f: CircleObservable, mu: AtomicMeasure, N: int) -> CircleObservable:
        validate_positive(N, "N")
        with precision():
            values = []
            for v, theta in zip(f.values, mu.angles):
                total = mpmath.fsum(mpmath.expjpi(to_mpf((2 * n * theta) % 2)) for n in range(1, N + 1))
                values.append(v * total / N)
            return CircleObservable(tuple(values))

    @staticmethod
    def norm2(f: CircleObservable, mu: AtomicMeasure) -> mpmath.mpf:
        validate_same_shape(len(f), mu.size, "наблюдаемая и мера")
        with precision():
            return mpmath.sqrt(mpmath.fsum(to_mpf(w) * abs(v) ** 2 for v, w in zip(f.values, mu.weights)))

    @staticmethod
    def sup_norm(f: CircleObservable) -> mpmath.mpf:
        return max((abs(v) for v in f.values), default=mpmath.mpf(0))

    @staticmethod
    def regions(epsilon: Fraction, F: GrowthFunction, M: int) -> Regions:
        """
        A_M, B_M, E_M для F, замененной на max(F, id). Диски не пересекаются
        при eps^2 M <= 72 F(M), иначе разбиение не определено
        """
        validate_positive(epsilon, "epsilon")
        validate_positive(M, "M")
        F_M = GrowthService.at_least_identity(F)(M)
        regions = Regions(Fraction(epsilon), M, F_M)
        if regions.a_radius > regions.b_radius:
            raise ValidationError(f"Диски A и B пересекаются при epsilon = {epsilon}, M = {M}")
        return regions

    @classmethod
    def classify(cls, regions: Regions, chord: Chord) -> str:
        if cls.compare_chord(chord, regions.a_radius) < 0:
            return REGION_A
        if cls.compare_chord(chord, regions.b_radius) >= 0:
            return REGION_B
        return REGION_E

    @classmethod
    def region_of(cls, epsilon: Fraction, F: GrowthFunction, M: int, theta: Fraction) -> str:
        with precision():
            return cls.classify(cls.regions(epsilon, F, M), cls.chord(Fraction(theta) % 1))

    @staticmethod
    def pigeonhole_count(epsilon: Fraction) -> int:
        """
        K = floor(36 / eps^2) + 1: среди K непересекающихся E_{M_i} найдется i с ||f E_{M_i}||_2 < eps/6
        """
        validate_positive(epsilon, "epsilon")
        return int(36 // Fraction(epsilon) ** 2) + 1

    @classmethod
    def vn_sequence(cls, epsilon: Fraction, F: GrowthFunction, M_bullet: int = 1) -> Tuple[int, ...]:
        """
        M_1 = M_bullet, M_{i+1} = floor(72 F(M_i) / eps^2) + 1 - наименьшее с 12/(eps M_{i+1}) < eps/(6 F(M_i))
        """
        validate_positive(M_bullet, "M_bullet")
        epsilon = Fraction(epsilon)
        F = GrowthService.at_least_identity(F)
        K = cls.pigeonhole_count(epsilon)
        sequence = [M_bullet]
        while len(sequence) < K:
            sequence.append(int(72 * F(sequence[-1]) // epsilon ** 2) + 1)
        logger.debug(f"M-последовательность для epsilon = {epsilon}, F = {F}: K = {K}")
        return tuple(sequence)

    @classmethod
    def _region_table(cls, epsilon: Fraction, F: GrowthFunction, sequence: Sequence[int]) -> List[Regions]:
        table = [cls.regions(epsilon, F, M) for M in sequence]
        for current, following in zip(table, table[1:]):
            if not following.b_radius < current.a_radius:
                raise ValidationError(f"Области E для M = {current.M} и {following.M} пересекаются")
        return table

    @classmethod
    def _e_index(cls, table: List[Regions], chord: Chord) -> int | None:
        """
        Номер i с lambda в E_{M_i}. Радиусы A убывают по i, поэтому
        кандидат один - наименьшее i с a_i <= |1 - lambda|
        """
        low, high = 0, len(table)
        while low < high:
            middle = (low + high) // 2
            if cls.compare_chord(chord, table[middle].a_radius) >= 0:
                high = middle
            else:
                low = middle + 1
        if low < len(table) and cls.compare_chord(chord, table[low].b_radius) < 0:
            return low
        return None

    @classmethod
    def pigeonhole_decompose(cls, f: CircleObservable, mu: AtomicMeasure, epsilon: Fraction, F: GrowthFunction,
                             M_bullet: int = 1, sequence: Sequence[int] | None = None) -> Decomposition:
        """
        i = argmin ||f 1_{E_{M_i}}||_2 (первый минимум), sigma = f 1_A, u = f 1_B, v = f 1_E
        """
        validate_same_shape(len(f), mu.size, "наблюдаемая и мера")
        epsilon = Fraction(epsilon)
        sequence = tuple(sequence) if sequence is not None else cls.vn_sequence(epsilon, F, M_bullet)
        with precision():
            if cls.norm2(f, mu) > 1 + cls.margin():
                raise ValidationError("Ожидалась функция с ||f||_2 <= 1")
            table = cls._region_table(epsilon, F, sequence)
            chords = [cls.chord(theta) for theta in mu.angles]

            masses = [mpmath.mpf(0)] * len(table)
            for chord, value, weight in zip(chords, f.values, mu.weights):
                index = cls._e_index(table, chord)
                if index is not None:
                    masses[index] += to_mpf(weight) * abs(value) ** 2
            i = min(range(len(table)), key=lambda k: (masses[k], k))

            labels = tuple(cls.classify(table[i], chord) for chord in chords)
            sigma = f.restrict([label == REGION_A for label in labels])
            u = f.restrict([label == REGION_B for label in labels])
            v = f.restrict([label == REGION_E for label in labels])
            v_norm = cls.norm2(v, mu)

            if v_norm >= to_mpf(epsilon / 6):
                logger.warning(f"||v||_2 = {mpmath.nstr(v_norm, 10)} не меньше eps/6")
        logger.debug(f"Разложение: i = {i + 1}, M_i = {sequence[i]}")
        return Decomposition(i + 1, sequence[i], sigma, u, v, v_norm, labels)

    @classmethod
    def _oscillation_exhaustive(cls, f: CircleObservable, mu: AtomicMeasure, M: int, F_M: int) -> mpmath.mpf:
        weights = [to_mpf(w) * abs(v) ** 2 for v, w in zip(f.values, mu.weights)]
        factors = {N: [cls.mean_factor(theta, N) for theta in mu.angles] for N in range(M, F_M + 1)}
        worst = mpmath.mpf(0)
        for N in range(M, F_M + 1):
            for N2 in range(N + 1, F_M + 1):
                square = mpmath.fsum(w * abs(a - b) ** 2 for w, a, b in zip(weights, factors[N], factors[N2]))
                worst = max(worst, square)
        return mpmath.sqrt(worst)

    @classmethod
    def _oscillation_envelope(cls, f: CircleObservable, mu: AtomicMeasure, M: int, F_M: int) -> mpmath.mpf:
        """
        |m_N - m_N'| <= min(2, (F+1) |1-lambda|, 4 / (M |1-lambda|)) для M <= N, N' <= F
        """
        total = mpmath.mpf(0)
        for theta, value, weight in zip(mu.angles, f.values, mu.weights):
            _, d = cls.chord(theta)
            if d == 0:
                continue
            bound = min(mpmath.mpf(2), (F_M + 1) * d, 4 / (M * d))
            total += to_mpf(weight) * (abs(value) * bound) ** 2
        return mpmath.sqrt(total)

    @classmethod
    def check_metastability(cls, f: CircleObservable, mu: AtomicMeasure, epsilon: Fraction, i: int,
                            F: GrowthFunction, sequence: Sequence[int]) -> MetastabilityReport:
        """
        sup_{M_i <= N, N' <= F(M_i)} ||a_N - a_N'||_2 < eps. Узкое окно перебирается целиком,
        широкое оценивается сверху поатомной огибающей
        """
        if not 1 <= i <= len(sequence):
            raise ValidationError(f"Номер i = {i} вне 1..{len(sequence)}")
        validate_same_shape(len(f), mu.size, "наблюдаемая и мера")
        M = sequence[i - 1]
        F_M = GrowthService.at_least_identity(F)(M)
        with precision():
            if F_M - M + 1 <= settings.VN_EXHAUSTIVE_WINDOW:
                method, oscillation = "exhaustive", cls._oscillation_exhaustive(f, mu, M, F_M)
            else:
                method, oscillation = "envelope", cls._oscillation_envelope(f, mu, M, F_M)
            threshold = to_mpf(Fraction(epsilon))
            if abs(oscillation - threshold) <= cls.margin():
                logger.error(f"Осцилляция {oscillation} неотличима от epsilon = {epsilon}")
                raise PrecisionAmbiguityError("oscillation vs epsilon is ambiguous at current precision")
        return MetastabilityReport(i, M, F_M, oscillation, oscillation < threshold, method)

    @classmethod
    def support_stability_bound(cls, f: CircleObservable, mu: AtomicMeasure, epsilon: Fraction, F: GrowthFunction,
                                M: int, n: int) -> StabilityReport:
        """
        Для supp f в A_M и n <= F(M): ||U^n f - f||_inf <= n max|1 - lambda| ||f||_inf <= eps ||f||_inf / 6
        """
        regions = cls.regions(epsilon, F, M)
        if not 1 <= n <= regions.F_M:
            raise ValidationError(f"n = {n} вне 1..F(M) = {regions.F_M}")
        with precision():
            support = [(theta, v) for theta, v in zip(mu.angles, f.values) if v != 0]
            if any(cls.classify(regions, cls.chord(theta)) != REGION_A for theta, _ in support):
                raise ValidationError("Носитель f должен лежать в A_M")
            sup_f = cls.sup_norm(f)
            sup_difference = max(
                (2 * abs(mpmath.sinpi(to_mpf((n * theta) % 2))) * abs(v) for theta, v in support),
                default=mpmath.mpf(0),
            )
            widest = max((cls.chord(theta)[1] for theta, _ in support), default=mpmath.mpf(0))
            bound = n * widest * sup_f
            passed = (sup_difference <= bound + cls.margin()
                      and bound <= to_mpf(Fraction(epsilon)) * sup_f / 6 + cls.margin())
        return StabilityReport(n, sup_difference, bound, passed)

    @staticmethod
    def random_case(rng: np.random.Generator, max_atoms: int = 50) -> Tuple[AtomicMeasure, CircleObservable]:
        """
        Случайная атомарная мера (часть атомов у единицы) и f с ||f||_2 < 1
        """
        size = int(rng.integers(1, max_atoms + 1))
        pairs = {}
        for _ in range(size):
            if rng.random() < 0.3:
                theta = Fraction(int(rng.integers(0, 50)), 10 ** int(rng.integers(2, 12)))
                if rng.random() < 0.5:
                    theta = -theta
            else:
                denominator = int(rng.integers(1, 10 ** 6))
                theta = Fraction(int(rng.integers(0, denominator)), denominator)
            theta %= 1
            pairs[theta] = pairs.get(theta, 0) + int(rng.integers(1, 100))
        total = sum(pairs.values())
        mu = AtomicMeasure.from_pairs({theta: Fraction(w, total) for theta, w in pairs.items()})

        raw = rng.normal(size=(2, mu.size))
        target = rng.uniform(0.05, 0.999)
        with precision():
            values = [mpmath.mpc(float(re), float(im)) for re, im in zip(raw[0], raw[1])]
            f = CircleObservable(tuple(values))
            norm = CircleService.norm2(f, mu)
            scale = mpmath.mpf(target) / norm if norm > 0 else mpmath.mpf(0)
            return mu, CircleObservable(tuple(v * scale for v in values))

    @classmethod
    def vn_sweep(cls, epsilon: Fraction, F: GrowthFunction, M_bullet: int, cases: int, seed: int,
                 max_atoms: int = 50) -> SweepReport:
        """
        Прогон по случайным мерам с одной и той же M-последовательностью
        """
        validate_positive(cases, "cases")
        epsilon = Fraction(epsilon)
        sequence = cls.vn_sequence(epsilon, F, M_bullet)
        rng = np.random.default_rng(seed)
        corpus = [cls.random_case(rng, max_atoms) for _ in range(cases)]
        logger.debug(f"Прогон: {cases} мер, K = {len(sequence)}, seed = {seed}")

        def run(case: int) -> SweepRow:
            mu, f = corpus[case]
            decomposition = cls.pigeonhole_decompose(f, mu, epsilon, F, sequence=sequence)
            report = cls.check_metastability(f, mu, epsilon, decomposition.i, F, sequence)
            return SweepRow(case, report.i, report.max_oscillation, report.passed, report.method)

        # точность mpmath общая для процесса: задается один раз на весь прогон
        with precision():
            rows = tuple(parallel_map(run, range(cases)))
        report = SweepReport(epsilon, str(F), sequence, rows)
        failed = len(rows) - report.summary()["passed"]
        if failed:
            logger.warning(f"Метастабильность нарушена в {failed} случаях из {cases}")
        else:
            logger.info(f"Все {cases} случаев прошли проверку, K = {len(sequence)}")
        return report
