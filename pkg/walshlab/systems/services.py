import logging
from functools import lru_cache
from typing import List, Sequence

from django.conf import settings
from django.core.exceptions import ValidationError

from polymap.models import Inconclusive, PolyMap
from polymap.services import Point, PolyMapService
from systems.models import ComplexityCertificate, ReductionStep, System
from utils.exceptions import BoundOverflowError

logger = logging.getLogger(__name__)


class SystemService:
    """
    Системы отображений: редукция, нормализация ("cheating") и проверка g_0 = 1
    """

    @staticmethod
    def build(maps: Sequence[PolyMap], with_identity: bool = True) -> System:
        """
        Система (1, g_1, ..., g_j) в общем кольце параметров
        """
        maps = list(maps)
        if with_identity:
            if not maps:
                raise ValidationError("Для построения системы нужно хотя бы одно отображение")
            maps.insert(0, PolyMapService.identity(maps[0].model, maps[0].dim))
        maps = PolyMapService.unify(*maps)
        system = System(tuple(maps))
        SystemService.prefix_identity_check(system)
        return system

    @staticmethod
    def prefix_identity_check(system: System) -> None:
        if not PolyMapService.is_identity(system.maps[0]):
            logger.error(f"Первое отображение системы не тождественно: {system.maps[0]}")
            raise ValidationError("g_0 должно быть тождественно равно единице")

    @staticmethod
    def reduction_pair(g: PolyMap, h: PolyMap, a: Point, b: Point) -> PolyMap:
        """
        <g|h>_{a,b}(n) = g(n) g(anb)^-1 h(anb)
        """
        shifted_g = PolyMapService.translate(g, a, b)
        shifted_h = PolyMapService.translate(h, a, b)
        return PolyMapService.pointwise_mul(
            g, PolyMapService.pointwise_mul(PolyMapService.pointwise_inv(shifted_g), shifted_h)
        )

    @classmethod
    def reduce(cls, system: System, a: Point, b: Point) -> System:
        """
        Редукция g*_{a,b} = g' U <g_j|g'>_{a,b}, где g' = (g_0, ..., g_{j-1})
        """
        if system.is_trivial:
            logger.error("Попытка редуцировать тривиальную систему")
            raise ValidationError("Тривиальная система не имеет редукции")
        prefix = system.maps[:-1]
        last = system.maps[-1]
        reduced = [cls.reduction_pair(last, h, a, b) for h in prefix]
        return System(tuple(PolyMapService.unify(*prefix, *reduced)))

    @classmethod
    def right_reduce(cls, system: System, b: Point) -> System:
        return cls.reduce(system, None, b)

    @staticmethod
    def canonical(g: PolyMap) -> PolyMap:
        """
        Представитель класса g*c (c - постоянная справа): g(n) g(1)^-1
        """
        return PolyMapService.pointwise_mul(g, PolyMapService.pointwise_inv(PolyMapService.at(g, None)))

    @staticmethod
    def _order_key(g: PolyMap):
        return (
            g.dim,
            PolyMapService.n_degree(g),
            tuple(str(g.entries[i][j]) for i in range(g.dim) for j in range(i + 1, g.dim)),
        )

    @classmethod
    def cheat_normalize(cls, system: System) -> System:
        """
        Каноническая форма: отображения берутся с точностью до постоянной
        справа, постоянные и повторы отбрасываются, порядок фиксирован, в начале 1
        """
        maps = PolyMapService.unify(*system.maps)
        representatives = {}
        for g in maps[1:]:
            rep = cls.canonical(g)
            if PolyMapService.is_identity(rep):
                continue
            representatives.setdefault(rep.entries, rep)
        ordered = sorted(representatives.values(), key=cls._order_key)
        identity = PolyMapService.identity(system.model, system.dim, maps[0].params)
        return System((identity, *ordered))

    @staticmethod
    def _fresh(system: System, right: bool) -> tuple:
        model = system.model
        if right or model.is_abelian:
            (b,) = PolyMapService.fresh_params(system.maps[-1], 1)
            return None, b
        return PolyMapService.fresh_params(system.maps[-1], 2)

    @classmethod
    def _certify(cls, system: System, budget: int, right: bool) -> ComplexityCertificate | Inconclusive:
        if budget < 0:
            raise ValidationError("Бюджет должен быть неотрицательным")
        kind = "правой " if right else ""
        logger.debug(f"Оценка {kind}сложности системы из {system.j + 1} отображений, бюджет {budget}")

        current = cls.cheat_normalize(system)
        steps = [ReductionStep(None, None, current.describe())]
        while not current.is_trivial:
            if len(steps) - 1 >= budget:
                logger.warning(f"Бюджет {budget} исчерпан, система: {current}")
                return Inconclusive(f"budget {budget} exhausted with j={current.j}", budget)
            a, b = cls._fresh(current, right)
            current = cls.cheat_normalize(cls.reduce(current, a, b))
            steps.append(ReductionStep(a, b, current.describe()))

        bound = len(steps) - 1
        logger.info(f"Сложность {kind}системы не превосходит {bound}")
        return ComplexityCertificate(bound, tuple(steps), right)

    @classmethod
    def certify_complexity(cls, system: System, budget: int) -> ComplexityCertificate | Inconclusive:
        """
        Последовательные редукции со свежими символьными (a, b) и нормализацией
        до тривиальной системы. Для Z^r редукция зависит только от a*b,
        поэтому используется один параметр.
        """
        return cls._certify(system, budget, right=False)

    @classmethod
    def certify_right_complexity(cls, system: System, budget: int) -> ComplexityCertificate | Inconclusive:
        return cls._certify(system, budget, right=True)

    @staticmethod
    def _check_commuting_antihomomorphisms(maps: Sequence[PolyMap]) -> None:
        for index, g in enumerate(maps, start=1):
            if not PolyMapService.is_antihomomorphism(g):
                logger.error(f"Отображение g_{index} не является антигомоморфизмом: {g}")
                raise ValidationError(f"g_{index} не является антигомоморфизмом")
        for i, g in enumerate(maps, start=1):
            for k, h in enumerate(maps, start=1):
                if i != k and not PolyMapService.commute_pointwise(g, h):
                    logger.error(f"Отображения g_{i} и g_{k} не коммутируют")
                    raise ValidationError(f"g_{i}(n) и g_{k}(b) не коммутируют")

    @classmethod
    def commuting_antihom_system(cls, maps: Sequence[PolyMap]) -> System:
        """
        Система накопленных произведений (1, g_1, g_1 g_2, ..., g_1...g_j)
        для попарно коммутирующих антигомоморфизмов
        """
        if not maps:
            raise ValidationError("Нужен хотя бы один антигомоморфизм")
        cls._check_commuting_antihomomorphisms(maps)
        cumulative = [PolyMapService.identity(maps[0].model, maps[0].dim)]
        for g in maps:
            cumulative.append(PolyMapService.pointwise_mul(cumulative[-1], g))
        return cls.build(cumulative, with_identity=False)

    @classmethod
    def commuting_actions_system(cls, actions: Sequence[PolyMap]) -> System:
        """
        Действия tau_i, заданные гомоморфизмами Gamma -> UT, переходят в
        антигомоморфизмы g_i(m) = tau_i(m)^-1; из них строится система накопленных произведений
        """
        for index, tau in enumerate(actions, start=1):
            if not PolyMapService.is_homomorphism(tau):
                logger.error(f"Действие tau_{index} не является гомоморфизмом: {tau}")
                raise ValidationError(f"tau_{index} не является гомоморфизмом")
        return cls.commuting_antihom_system([PolyMapService.pointwise_inv(tau) for tau in actions])


class ComplexityBoundService:
    """
    Рекурсивные оценки c(d, j) и c'(d, j, |h_0|, ..., |h_{j-1}|, c_j).
    Длина d = None соответствует минус бесконечности.
    """

    @staticmethod
    def _lower(d: int | None) -> int | None:
        if d is None or d == 0:
            return None
        return d - 1

    @classmethod
    def cprime(cls, d: int | None, j: int, sizes: Sequence[int], c_j: int) -> int:
        """
        c'(d, 0, c_0) = c_0;
        c'(d, j, s, 0) = c'(d, j-1, 2s_0, ..., 2s_{j-2}, c(d-1, 2s_{j-1})) + 1;
        c'(d, j, s, c_j) = c'(d, j, 2s, c_j - 1) + 1.
        Размеры хранятся как s * 2^shift, удвоения накапливаются в shift.
        """
        if len(sizes) != j:
            raise ValidationError(f"Ожидалось {j} размеров, получено {len(sizes)}")
        if any(s < 1 for s in sizes) or c_j < 0:
            raise ValidationError("Размеры должны быть положительными, c_j неотрицательным")

        max_bits = settings.COMPLEXITY_BOUND_MAX_BITS
        stack: List[int] = list(sizes)
        shift, total = 0, 0
        while stack:
            if c_j > 0:
                total += c_j
                shift += c_j
                c_j = 0
            if shift > max_bits:
                logger.error(f"Оценка сложности превысила {max_bits} бит: d={d}, j={j}")
                raise BoundOverflowError(f"c'({d}, {j}, ...) exceeds {max_bits} bits")
            size = stack.pop() << (shift + 1)
            c_j = cls.complexity_bound(cls._lower(d), size)
            shift += 1
            total += 1
        return total + c_j

    @classmethod
    def complexity_bound(cls, d: int | None, j: int) -> int:
        """
        c(d, j) = c'(d, j, 1, ..., 1, 0), c(-inf, j) = 0, c(0, j) = j
        """
        if j < 0:
            raise ValidationError("j должно быть неотрицательным")
        if d is None:
            return 0
        if d < 0:
            raise ValidationError("Длина должна быть неотрицательной или None")
        if d == 0:
            return j
        cap = settings.COMPLEXITY_BOUND_MAX_ARITY
        if j > cap:
            logger.error(f"Арность {j} превышает предел {cap} при d={d}")
            raise BoundOverflowError(f"c({d}, j) with j={j} exceeds arity cap {cap}")
        return cls._bound(d, j)

    @classmethod
    @lru_cache(maxsize=None)
    def _bound(cls, d: int, j: int) -> int:
        return cls.cprime(d, j, [1] * j, 0)

    @classmethod
    def default_budget(cls, d: int | None, j: int, fallback: int) -> int:
        """
        Бюджет сертификации: c(d, j), если оценка вычислима, иначе fallback
        """
        try:
            return cls.complexity_bound(d, j)
        except BoundOverflowError:
            logger.warning(f"c({d}, {j}) не вычислима, используется бюджет {fallback}")
            return fallback

