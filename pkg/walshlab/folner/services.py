import logging
from collections import Counter
from fractions import Fraction
from typing import Callable, Dict, FrozenSet, Iterable, List, Sequence, Tuple

import numpy as np
from django.conf import settings
from django.core.exceptions import ValidationError

from folner.models import CeilResult, Element, FolnerSet, PhiResult
from polymap.models import GroupModel
from utils.exceptions import SearchCapExceeded
from utils.validates import validate_positive

logger = logging.getLogger(__name__)


class FolnerService:
    """
    Множества Фёльнера в Z^r и Heis со счетной мерой
    """

    @staticmethod
    def measure(I: FolnerSet) -> int:
        if I.model.is_abelian:
            return I.N ** I.model.rank
        return I.N ** 4

    @staticmethod
    def translate_points(model: GroupModel, points: Iterable[Element], a: Element | None = None,
                         b: Element | None = None) -> List[Element]:
        a = a if a is not None else model.identity()
        b = b if b is not None else model.identity()
        return [model.mul(model.mul(a, n), b) for n in points]

    @classmethod
    def members(cls, I: FolnerSet) -> FrozenSet[Element]:
        return frozenset(cls.translate_points(I.model, I.canonical(), I.a, I.b))

    @staticmethod
    def in_canonical(model: GroupModel, N: int, n: Element) -> bool:
        if model.is_abelian:
            return all(0 <= c < N for c in n)
        x, y, z = n
        return 0 <= x < N and 0 <= y < N and 0 <= z < N * N

    @classmethod
    def contains(cls, I: FolnerSet, x: Element) -> bool:
        """
        x in a F_N b  <=>  a^-1 x b^-1 in F_N
        """
        model = I.model
        core = model.mul(model.mul(model.inv(I.left), tuple(x)), model.inv(I.right))
        return cls.in_canonical(model, I.N, core)

    @staticmethod
    def intersection_count(model: GroupModel, l: Element, N: int) -> int:
        """
        |l F_N ∩ F_N|. Для Z^r - произведение max(0, N - |l_i|);
        для Heis l = (p, q, s): (N - |p|)_+ * sum_y (N^2 - |s + p y|)_+
        по y с 0 <= y, q + y < N
        """
        if model.is_abelian:
            count = 1
            for c in l:
                count *= max(0, N - abs(c))
            return count

        p, q, s = l
        if abs(p) >= N or abs(q) >= N:
            return 0
        ys = np.arange(max(0, -q), min(N, N - q), dtype=np.int64)
        overlaps = np.clip(N * N - np.abs(s + p * ys), 0, None)
        return (N - abs(p)) * int(overlaps.sum())

    @classmethod
    def symdiff_ratio(cls, model: GroupModel, l: Element, N: int) -> Fraction:
        """
        |l F_N D F_N| / |F_N| = 2 (|F_N| - |l F_N ∩ F_N|) / |F_N|
        """
        size = cls.measure(FolnerSet(model, N))
        return Fraction(2 * (size - cls.intersection_count(model, l, N)), size)

    @classmethod
    def symdiff_by_enumeration(cls, I: FolnerSet, l: Element) -> Fraction:
        base = cls.members(I)
        shifted = frozenset(cls.translate_points(I.model, base, l))
        return Fraction(len(base ^ shifted), len(base))

    @classmethod
    def sup_ratio(cls, model: GroupModel, shifts: Iterable[Element], N: int) -> Fraction:
        return max((cls.symdiff_ratio(model, l, N) for l in shifts), default=Fraction(0))

    @classmethod
    def sup_ratio_table(cls, model: GroupModel, L: int, Ns: Sequence[int]) -> List[Tuple[int, Fraction]]:
        """
        Таблица (N, sup_{l in F_L} |l F_N D F_N| / |F_N|)
        """
        shifts = list(FolnerSet(model, L).canonical())
        return [(N, cls.sup_ratio(model, shifts, N)) for N in Ns]

    @staticmethod
    def _least_n(condition: Callable[[int], bool], monotone: bool, cap: int) -> int:
        if monotone:
            if not condition(cap):
                raise SearchCapExceeded(f"условие не выполнено при N = {cap}")
            low, high = 1, cap
            while low < high:
                middle = (low + high) // 2
                if condition(middle):
                    high = middle
                else:
                    low = middle + 1
            return low
        for N in range(1, cap + 1):
            if condition(N):
                return N
        raise SearchCapExceeded(f"условие не выполнено ни при каком N <= {cap}")

    @staticmethod
    def phi_closed_form(gamma: Fraction, L: int) -> int:
        """
        phi_gamma(L) для Z без ограничения поиска: floor(2(L-1)/gamma) + 1
        """
        if gamma > 2:
            return 1
        return int(2 * (L - 1) // Fraction(gamma)) + 1

    @classmethod
    def phi(cls, model: GroupModel, gamma: Fraction, L: int, search_cap: int | None = None) -> PhiResult:
        """
        phi_gamma(L): наименьшее N с sup_{l in F_L} |l F_N D F_N| / |F_N| < gamma.

        Для Z^r sup достигается в l = (L-1, ..., L-1) и убывает по N,
        поэтому монотонность доказана; для Heis проверяется окно после N.
        """
        validate_positive(gamma, "gamma")
        validate_positive(L, "L")
        cap = search_cap or settings.FOLNER_SEARCH_CAP
        logger.debug(f"phi_{gamma}({L}) для {model}, предел поиска {cap}")

        if model.is_abelian:
            corner = (L - 1,) * model.rank
            if model.rank == 1:
                N = cls.phi_closed_form(gamma, L)
                if N > cap:
                    logger.error(f"phi_{gamma}({L}) = {N} превышает предел {cap}")
                    raise SearchCapExceeded(f"phi = {N} > {cap}")
            else:
                try:
                    N = cls._least_n(lambda M: cls.symdiff_ratio(model, corner, M) < gamma, True, cap)
                except SearchCapExceeded:
                    logger.error(f"phi_{gamma}({L}) не найдено до {cap}")
                    raise
            result = PhiResult(N, gamma, L, cls.symdiff_ratio(model, corner, N), True)
        else:
            shifts = list(FolnerSet(model, L).canonical())

            def condition(M: int) -> bool:
                return cls.sup_ratio(model, shifts, M) < gamma

            try:
                N = cls._least_n(condition, False, cap)
            except SearchCapExceeded:
                logger.error(f"phi_{gamma}({L}) не найдено до {cap}")
                raise
            window = range(N + 1, min(cap, N + settings.FOLNER_MONOTONE_WINDOW) + 1)
            monotone = all(condition(M) for M in window)
            if not monotone:
                logger.warning(f"Условие phi нарушается в окне после N = {N}")
            result = PhiResult(N, gamma, L, cls.sup_ratio(model, shifts, N), monotone)

        logger.info(f"phi_{gamma}({L}) = {result.N} для {model}")
        return result

    @classmethod
    def approx_included(cls, K: Iterable[Element], I: FolnerSet, gamma: Fraction) -> bool:
        """
        K <~_gamma I:  |K \\ I| / |K| < gamma
        """
        K = set(K)
        if not K:
            raise ValidationError("Множество K должно быть непустым")
        outside = sum(1 for x in K if not cls.contains(I, x))
        return Fraction(outside, len(K)) < gamma

    @staticmethod
    def expectation(points: Iterable[Element], f: Callable[[Element], object]) -> Fraction:
        points = list(points)
        if not points:
            raise ValidationError("Среднее по пустому множеству не определено")
        return sum((Fraction(f(n)) for n in points), Fraction(0)) / len(points)

    @classmethod
    def shifted_expectation(cls, model: GroupModel, points: Iterable[Element], f: Callable[[Element], object],
                            a: Element | None = None, b: Element | None = None) -> Fraction:
        """
        E_{n in I} f(a n b), равное E_{n in aIb} f(n)
        """
        return cls.expectation(points, lambda n: f(cls.translate_points(model, [n], a, b)[0]))

    @classmethod
    def ceil_witness(cls, left: FolnerSet, right: FolnerSet, gamma: Fraction, N: int) -> Element | None:
        """
        Сдвиг b с I <~_gamma F_N b и I' <~_gamma F_N b либо None.

        Кандидаты b = n^-1 k (n in F_N, k in K) перебираются по убыванию |K ∩ F_N b|,
        остальные b не пересекают K.
        """
        model = left.model
        K = cls.members(left) | cls.members(right)
        base = FolnerSet(model, N)
        work = len(K) * cls.measure(base)
        if work > settings.FOLNER_EXHAUSTIVE_CANDIDATES:
            logger.error(f"Перебор свидетелей для N = {N} требует {work} шагов")
            raise SearchCapExceeded(f"witness search for N={N} needs {work} candidates")

        counts = Counter(model.mul(model.inv(n), k) for n in base.canonical() for k in K)
        left_members, right_members = cls.members(left), cls.members(right)
        for b, _ in sorted(counts.items(), key=lambda item: (-item[1], item[0])):
            shifted = FolnerSet(model, N, None, b)
            if cls.approx_included(left_members, shifted, gamma) and cls.approx_included(right_members, shifted, gamma):
                return b
        return None

    @classmethod
    def ceil(cls, left: FolnerSet, right: FolnerSet, gamma: Fraction, search_cap: int | None = None) -> CeilResult:
        """
        [I, I']_gamma. С beta = gamma min(|I|, |I'|) / |K|, K = I u I', усреднение
        по сдвигам дает свидетеля при sup_{l in K K^-1} |l F_N D F_N| / |F_N| < 2 beta.
        Ниже этого порога свидетели проверяются перебором, n0 - начало
        непрерывного участка проверенных N.
        """
        validate_positive(gamma, "gamma")
        if left.model != right.model:
            raise ValidationError("Множества должны лежать в одной группе")
        model = left.model
        cap = search_cap or settings.FOLNER_SEARCH_CAP
        logger.debug(f"[{left}, {right}]_{gamma}")

        K = cls.members(left) | cls.members(right)
        beta = gamma * min(cls.measure(left), cls.measure(right)) / len(K)
        differences = {model.mul(k0, model.inv(k)) for k0 in K for k in K}

        def condition(N: int) -> bool:
            return cls.sup_ratio(model, differences, N) < 2 * beta

        try:
            proof_n = cls._least_n(condition, model.is_abelian, cap)
        except SearchCapExceeded:
            logger.error(f"Порог усреднения для [{left}, {right}]_{gamma} не найден до {cap}")
            raise
        monotone = True
        if not model.is_abelian:
            window = range(proof_n + 1, min(cap, proof_n + settings.FOLNER_MONOTONE_WINDOW) + 1)
            monotone = all(condition(N) for N in window)
            if not monotone:
                logger.warning(f"Условие порога усреднения нарушается в окне после N = {proof_n}")

        witnesses: Dict[int, Element] = {}
        n0 = proof_n
        for N in range(proof_n, 0, -1):
            b = cls.ceil_witness(left, right, gamma, N)
            if b is None:
                break
            witnesses[N] = b
            n0 = N
        if proof_n not in witnesses:
            logger.warning(f"Свидетель на пороге усреднения N = {proof_n} не найден")
        logger.info(f"[{left}, {right}]_{gamma} <= {n0} (порог усреднения {proof_n})")
        return CeilResult(n0, proof_n, beta, witnesses, monotone)
