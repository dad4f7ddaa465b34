import logging
from fractions import Fraction
from itertools import chain, product
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from django.conf import settings
from django.core.exceptions import ValidationError
from sympy.polys.domains import QQ
from sympy.polys.rings import PolyElement, PolyRing

from nilgroup.models import PERM_KIND, PermElement, Prefiltration, UTElement
from nilgroup.services import GroupService, PrefiltrationService, ut_inverse, ut_matmul
from polymap.models import (
    Certified,
    GroupModel,
    Inconclusive,
    PermMap,
    PolyMap,
    Refuted,
    Verdict,
    coordinate_names,
    polynomial_ring,
    to_fraction,
)

logger = logging.getLogger(__name__)

# Точка группы Gamma: None (единица), кортеж целых/многочленов или имя символьного параметра
Point = Optional[Union[str, Sequence]]


def lift(ring: PolyRing, value) -> PolyElement:
    """
    Приведение числа или многочлена из меньшего кольца к кольцу ring
    """
    if isinstance(value, PolyElement):
        return value.set_ring(ring)
    return ring(value)


class PolyMapService:
    """
    Символьное исчисление полиномиальных отображений Gamma -> UT(dim):
    сдвиги, дискретные производные и поточечные групповые операции
    """

    @staticmethod
    def ring_for(model: GroupModel, params: Sequence[str] = ()) -> PolyRing:
        symbols = model.variables + tuple(chain.from_iterable(coordinate_names(p, model.arity) for p in params))
        return polynomial_ring(symbols)

    @classmethod
    def variables(cls, model: GroupModel) -> Tuple[PolyElement, ...]:
        """
        Образующие кольца, отвечающие координатам n
        """
        return cls.ring_for(model).gens

    @classmethod
    def from_matrix(cls, model: GroupModel, rows: Sequence[Sequence], params: Sequence[str] = ()) -> PolyMap:
        """
        Отображение по матрице многочленов (или чисел); диагональ и
        элементы под ней заменяются на 1 и 0
        """
        ring = cls.ring_for(model, params)
        dim = len(rows)
        entries = tuple(
            tuple(
                ring.one if i == j else ring.zero if j < i else lift(ring, rows[i][j])
                for j in range(dim)
            )
            for i in range(dim)
        )
        return PolyMap(model, dim, entries, tuple(params))

    @classmethod
    def identity(cls, model: GroupModel, dim: int, params: Sequence[str] = ()) -> PolyMap:
        return cls.from_matrix(model, [[0] * dim for _ in range(dim)], params)

    @classmethod
    def constant(cls, model: GroupModel, element: UTElement, params: Sequence[str] = ()) -> PolyMap:
        return cls.from_matrix(model, element.entries, params)

    @classmethod
    def one_parameter(cls, model: GroupModel, dim: int, i: int, j: int, polynomial) -> PolyMap:
        """
        n -> E_ij(p(n)), индексы с единицы
        """
        if not 1 <= i < j <= dim:
            raise ValidationError(f"Некорректная позиция ({i}, {j}) для UT({dim})")
        rows = [[0] * dim for _ in range(dim)]
        rows[i - 1][j - 1] = polynomial
        return cls.from_matrix(model, rows)

    @classmethod
    def from_factors(cls, model: GroupModel, dim: int, factors: Iterable[Tuple[int, int, object]]) -> PolyMap:
        """
        Поточечное произведение E_{i1 j1}(p_1) * E_{i2 j2}(p_2) * ...
        """
        result = cls.identity(model, dim)
        for i, j, polynomial in factors:
            result = cls.pointwise_mul(result, cls.one_parameter(model, dim, i, j, polynomial))
        return result

    @classmethod
    def power_map(cls, model: GroupModel, element: UTElement, coordinate: int = 0) -> PolyMap:
        """
        n -> h^{n_coordinate} через биномиальное разложение h^m = sum C(m, k) (h - 1)^k
        """
        ring = cls.ring_for(model)
        m = ring.gens[coordinate]
        dim = element.dim
        nilpotent = [[element.entries[r][c] - int(r == c) for c in range(dim)] for r in range(dim)]
        power = [[int(r == c) for c in range(dim)] for r in range(dim)]
        rows = [[ring.zero] * dim for _ in range(dim)]
        binomial = ring.one
        for k in range(dim):
            for r, c in product(range(dim), repeat=2):
                if c > r:
                    rows[r][c] += binomial * power[r][c]
            power = [[sum(power[r][t] * nilpotent[t][c] for t in range(dim)) for c in range(dim)] for r in range(dim)]
            binomial = binomial * (m - k) * QQ(1, k + 1)
        return cls.from_matrix(model, rows)

    @classmethod
    def homomorphism(cls, model: GroupModel, generators: Sequence[UTElement]) -> PolyMap:
        """
        n -> h_1^{n_1} ... h_r^{n_r}; для попарно коммутирующих h_k это гомоморфизм Z^r -> UT
        """
        if not model.is_abelian or len(generators) != model.rank:
            raise ValidationError("Гомоморфизм задается образами образующих Z^r")
        result = cls.identity(model, generators[0].dim)
        for coordinate, element in enumerate(generators):
            result = cls.pointwise_mul(result, cls.power_map(model, element, coordinate))
        return result

    @classmethod
    def heisenberg_embedding(cls) -> PolyMap:
        """
        Изоморфизм H_3(Z) -> UT(3): (x, y, z) -> [[1, x, z], [0, 1, y], [0, 0, 1]]
        """
        model = GroupModel.heis()
        x, y, z = cls.variables(model)
        return cls.from_matrix(model, [[0, x, z], [0, 0, y], [0, 0, 0]])

    @staticmethod
    def _check_compatible(g: PolyMap, h: PolyMap) -> None:
        if g.model != h.model or g.dim != h.dim:
            logger.error(f"Несовместимые отображения: {g} и {h}")
            raise ValidationError("Отображения заданы на разных группах или в разных UT")

    @classmethod
    def coerce(cls, g: PolyMap, params: Sequence[str]) -> PolyMap:
        """
        Перенос отображения в кольцо с расширенным списком параметров
        """
        params = tuple(params)
        if params == g.params:
            return g
        missing = set(g.params) - set(params)
        if missing:
            raise ValidationError(f"Параметры {sorted(missing)} потеряны при переносе")
        ring = cls.ring_for(g.model, params)
        entries = tuple(tuple(entry.set_ring(ring) for entry in row) for row in g.entries)
        return PolyMap(g.model, g.dim, entries, params)

    @classmethod
    def unify(cls, *maps: PolyMap) -> List[PolyMap]:
        params: List[str] = []
        for g in maps:
            cls._check_compatible(maps[0], g)
            params.extend(p for p in g.params if p not in params)
        return [cls.coerce(g, params) for g in maps]

    @staticmethod
    def fresh_params(g: PolyMap, count: int) -> Tuple[str, ...]:
        """
        Детерминированные свежие имена параметров, не встречающиеся в g
        """
        prefix = settings.WALSHLAB_PARAMETER_PREFIX
        names, k = [], 0
        while len(names) < count:
            name = f"{prefix}{k}"
            if name not in g.params:
                names.append(name)
            k += 1
        return tuple(names)

    @classmethod
    def _with_points(cls, g: PolyMap, *points: Point) -> PolyMap:
        extra = [p for p in points if isinstance(p, str) and p not in g.params]
        return cls.coerce(g, g.params + tuple(dict.fromkeys(extra)))

    @staticmethod
    def _coordinates(g: PolyMap, point: Point) -> tuple:
        ring, arity = g.ring, g.model.arity
        if point is None:
            return (ring.zero,) * arity
        if isinstance(point, str):
            offset = arity * (1 + g.params.index(point))
            return tuple(ring.gens[offset: offset + arity])
        if len(point) != arity:
            raise ValidationError(f"Ожидалось {arity} координат, получено {len(point)}")
        return tuple(ring(c) for c in point)

    @staticmethod
    def _substitute(g: PolyMap, values: Sequence[PolyElement]) -> PolyMap:
        replacements = list(zip(g.ring.gens[: g.model.arity], values))
        entries = tuple(
            tuple(entry.compose(replacements) if j > i else entry for j, entry in enumerate(row))
            for i, row in enumerate(g.entries)
        )
        return PolyMap(g.model, g.dim, entries, g.params)

    @classmethod
    def translate(cls, g: PolyMap, a: Point = None, b: Point = None) -> PolyMap:
        """
        Сдвиг T_{a,b} g(n) = g(a n b)
        """
        g = cls._with_points(g, a, b)
        n = g.ring.gens[: g.model.arity]
        anb = g.model.mul(g.model.mul(cls._coordinates(g, a), n), cls._coordinates(g, b))
        return cls._substitute(g, anb)

    @classmethod
    def at(cls, g: PolyMap, point: Point) -> PolyMap:
        """
        Постоянное по n отображение n -> g(point)
        """
        g = cls._with_points(g, point)
        return cls._substitute(g, cls._coordinates(g, point))

    @classmethod
    def pointwise_mul(cls, g: PolyMap, h: PolyMap) -> PolyMap:
        g, h = cls.unify(g, h)
        return PolyMap(g.model, g.dim, ut_matmul(g.entries, h.entries), g.params)

    @staticmethod
    def pointwise_inv(g: PolyMap) -> PolyMap:
        return PolyMap(g.model, g.dim, ut_inverse(g.entries), g.params)

    @classmethod
    def commutator_map(cls, g: PolyMap, h: PolyMap) -> PolyMap:
        """
        Поточечный коммутатор [g, h](n) = g(n)^-1 h(n)^-1 g(n) h(n)
        """
        return cls.pointwise_mul(
            cls.pointwise_mul(cls.pointwise_inv(g), cls.pointwise_inv(h)),
            cls.pointwise_mul(g, h),
        )

    @classmethod
    def derivative(cls, g: PolyMap, a: Point = None, b: Point = None) -> PolyMap:
        """
        Дискретная производная D_{a,b} g(n) = g(n)^-1 g(a n b)
        """
        shifted = cls.translate(g, a, b)
        return cls.pointwise_mul(cls.pointwise_inv(g), shifted)

    @classmethod
    def right_translate(cls, g: PolyMap, b: Point) -> PolyMap:
        return cls.translate(g, None, b)

    @classmethod
    def right_derivative(cls, g: PolyMap, b: Point) -> PolyMap:
        """
        Правая производная D_b g(n) = g(n)^-1 g(n b)
        """
        return cls.derivative(g, None, b)

    @staticmethod
    def is_identity(g: PolyMap) -> bool:
        return all(not g.entries[i][j] for i in range(g.dim) for j in range(i + 1, g.dim))

    @classmethod
    def equal(cls, g: PolyMap, h: PolyMap) -> bool:
        g, h = cls.unify(g, h)
        return g.entries == h.entries

    @staticmethod
    def n_degree(g: PolyMap) -> int:
        """
        Наибольшая полная степень элементов по координатам n
        """
        arity = g.model.arity
        return max(
            (sum(monom[:arity]) for row in g.entries for entry in row for monom in entry.monoms()),
            default=0,
        )

    @classmethod
    def is_constant(cls, g: PolyMap) -> bool:
        """
        Элементы не зависят от n (символьные параметры допускаются)
        """
        arity = g.model.arity
        return all(
            not any(monom[:arity])
            for i in range(g.dim)
            for j in range(i + 1, g.dim)
            for monom in g.entries[i][j].monoms()
        )

    @classmethod
    def is_homomorphism(cls, g: PolyMap) -> bool:
        b = cls.fresh_params(g, 1)[0]
        return cls.equal(cls.right_translate(g, b), cls.pointwise_mul(g, cls.at(g, b)))

    @classmethod
    def is_antihomomorphism(cls, g: PolyMap) -> bool:
        """
        Проверка g(n b) = g(b) g(n) тождественно по n и b
        """
        b = cls.fresh_params(g, 1)[0]
        return cls.equal(cls.right_translate(g, b), cls.pointwise_mul(cls.at(g, b), g))

    @classmethod
    def commute_pointwise(cls, g: PolyMap, h: PolyMap) -> bool:
        """
        Проверка g(n) h(b) = h(b) g(n) тождественно по n и b
        """
        g, h = cls.unify(g, h)
        b = cls.fresh_params(g, 1)[0]
        hb = cls.at(h, b)
        return cls.equal(cls.pointwise_mul(g, hb), cls.pointwise_mul(hb, g))

    @staticmethod
    def evaluate(g: PolyMap, n: Sequence[int], bindings: Dict[str, Sequence[int]] | None = None) -> UTElement:
        """
        Значение g(n) при заданных значениях символьных параметров
        """
        bindings = bindings or {}
        if len(n) != g.model.arity:
            raise ValidationError(f"Ожидалось {g.model.arity} координат n, получено {len(n)}")
        unbound = [p for p in g.params if p not in bindings]
        if unbound:
            logger.error(f"Не заданы значения параметров {unbound} для {g}")
            raise ValidationError(f"Несвязанные символьные параметры: {unbound}")

        values = list(n)
        for p in g.params:
            if len(bindings[p]) != g.model.arity:
                raise ValidationError(f"Параметр {p} должен иметь {g.model.arity} координат")
            values.extend(bindings[p])

        rows = [[int(r == c) for c in range(g.dim)] for r in range(g.dim)]
        for i, j, terms in g.compiled:
            value = Fraction(0)
            for coeff, powers in terms:
                term = coeff
                for k, e in powers:
                    term *= values[k] ** e
                value += term
            if value.denominator != 1:
                raise ValidationError(f"Элемент ({i + 1}, {j + 1}) не целый в точке {tuple(n)}")
            rows[i][j] = int(value)
        return UTElement(g.dim, tuple(tuple(row) for row in rows))


class PermMapService:
    """
    Отображения Z^r -> Sym(degree), проверяемые перебором по решетке периодов
    """

    @staticmethod
    def evaluate(g: PermMap, n: Sequence[int]) -> PermElement:
        result = GroupService.identity_perm(g.degree)
        for k, exponent in g.word:
            result = GroupService.mul(result, GroupService.power(g.base[k], int(to_fraction(exponent(*n)))))
        return result

    @staticmethod
    def pointwise_mul(g: PermMap, h: PermMap) -> PermMap:
        if g.model != h.model or g.base != h.base:
            raise ValidationError("Отображения заданы на разных базовых перестановках")
        return PermMap(g.model, g.base, g.word + h.word)

    @staticmethod
    def pointwise_inv(g: PermMap) -> PermMap:
        return PermMap(g.model, g.base, tuple((k, -exponent) for k, exponent in reversed(g.word)))

    @staticmethod
    def period(g: PermMap) -> int:
        return int(np.lcm.reduce([GroupService.order(p) for p in g.base]))

    @classmethod
    def iterated_derivative(cls, g: PermMap, shifts: Sequence[Sequence[int]]) -> Callable[[Tuple[int, ...]], PermElement]:
        """
        n -> D_{c_1} ... D_{c_k} g(n); для абелевой Gamma производная зависит только от c = a + b
        """
        table: Dict[Tuple[int, ...], PermElement] = {}
        q = cls.period(g)

        def base(n: Tuple[int, ...]) -> PermElement:
            key = tuple(c % q for c in n)
            if key not in table:
                table[key] = cls.evaluate(g, key)
            return table[key]

        current = base
        for shift in shifts:
            def step(n, inner=current, c=tuple(shift)):
                moved = tuple(x + y for x, y in zip(n, c))
                return GroupService.mul(GroupService.inv(inner(n)), inner(moved))
            current = step
        return current

    @classmethod
    def find_violation(cls, g: PermMap, d: int | None) -> Tuple[Tuple[Tuple[int, ...], ...], Tuple[int, ...]] | None:
        """
        Поиск (c_1, ..., c_{d+1}, n) с D_{c_1} ... D_{c_{d+1}} g(n) != 1 на решетке периодов.
        d = None означает проверку g = 1.
        """
        q, r = cls.period(g), g.model.rank
        order = 0 if d is None else d + 1
        box = list(product(range(q), repeat=r))
        if len(box) ** (order + 1) > settings.PERIOD_LATTICE_CAP:
            return None
        for shifts in product(box, repeat=order):
            derived = cls.iterated_derivative(g, shifts)
            for n in box:
                if not derived(n).is_identity:
                    return shifts, n
        return ()

    @classmethod
    def lattice_size(cls, g: PermMap, d: int | None) -> int:
        order = 0 if d is None else d + 1
        return (cls.period(g) ** g.model.rank) ** (order + 1)


class PolynomialityService:
    """
    Проверка полиномиальности относительно префильтрации
    """

    @staticmethod
    def default_depth_cap(g: PolyMap, gb: Prefiltration) -> int:
        length = -1 if gb.length is None else gb.length
        return (length + 1) * (1 + PolyMapService.n_degree(g)) or 1

    @staticmethod
    def _violated_position(g: PolyMap, offset: int | None) -> Tuple[int, int] | None:
        limit = g.dim if offset is None else offset
        for k in range(1, min(limit, g.dim)):
            for r in range(g.dim - k):
                if g.entries[r][r + k]:
                    return r, r + k
        return None

    @staticmethod
    def nonzero_point(poly: PolyElement, seed: int = 0, attempts: int = 64) -> Tuple[int, ...]:
        """
        Целая точка, в которой ненулевой многочлен не обращается в нуль.
        Сначала случайный поиск, затем перебор куба {0..D}^k, где D - степень
        по каждой переменной: на таком кубе ненулевой многочлен не зануляется.
        """
        ngens = poly.ring.ngens
        rng = np.random.default_rng(seed)
        for _ in range(attempts):
            point = tuple(int(v) for v in rng.integers(-5, 6, size=ngens))
            if poly(*point) != 0:
                return point
        top = max(max(poly.degrees()), 0)
        for point in product(range(top + 1), repeat=ngens):
            if poly(*point) != 0:
                return point
        raise ValidationError("Нулевой многочлен не имеет точки с ненулевым значением")

    @classmethod
    def _witness(cls, g: PolyMap, position: Tuple[int, int]) -> Dict[str, Tuple[int, ...]]:
        point = cls.nonzero_point(g.entries[position[0]][position[1]])
        arity = g.model.arity
        witness = {"n": point[:arity]}
        for index, name in enumerate(g.params, start=1):
            witness[name] = point[index * arity: (index + 1) * arity]
        return witness

    @classmethod
    def is_polynomial(cls, g: PolyMap | PermMap, gb: Prefiltration, depth_cap: int | None = None) -> Verdict:
        """
        Рекурсивная проверка: g принимает значения в G_0 и D_{a,b} g является
        Gb[+1]-полиномиальным, при длине минус бесконечность g = 1.
        Параметры a, b на каждом уровне свежие и символьные.
        """
        if isinstance(g, PermMap):
            return cls._perm_is_polynomial(g, gb)

        cap = depth_cap or settings.POLYMAP_DEPTH_CAP or cls.default_depth_cap(g, gb)
        logger.debug(f"Проверка полиномиальности {g} относительно {gb}, предел глубины {cap}")
        chain_maps = [str(g)]
        trace = []
        current = g
        level = 0
        while True:
            offset = gb.offset(level)
            position = cls._violated_position(current, offset)
            if position is not None:
                logger.info(f"Полиномиальность опровергнута на уровне {level}, позиция {position}")
                return Refuted(level, position, tuple(chain_maps), cls._witness(current, position))
            if offset is None:
                trace.append(f"level {level}: identity")
                logger.info(f"Полиномиальность подтверждена: {g}")
                return Certified(tuple(trace))
            trace.append(f"level {level}: offset {offset}, n-degree {PolyMapService.n_degree(current)}")
            if level >= cap:
                logger.warning(f"Достигнут предел глубины {cap} для {g}")
                return Inconclusive(f"depth cap {cap} reached", level)
            current = cls.symbolic_derivative(current)
            chain_maps.append(str(current))
            level += 1

    @staticmethod
    def symbolic_derivative(g: PolyMap) -> PolyMap:
        """
        D_{a,b} g со свежими символьными a, b. Для Z^r производная зависит
        только от a + b, поэтому хватает одного параметра.
        """
        if g.model.is_abelian:
            (b,) = PolyMapService.fresh_params(g, 1)
            return PolyMapService.derivative(g, None, b)
        a, b = PolyMapService.fresh_params(g, 2)
        return PolyMapService.derivative(g, a, b)

    @classmethod
    def _perm_is_polynomial(cls, g: PermMap, gb: Prefiltration) -> Verdict:
        if gb.kind != PERM_KIND:
            raise ValidationError("Для отображений в перестановки нужна префильтрация вида perm")
        d = gb.length
        logger.debug(f"Проверка перебором {g}, длина {d}")
        violation = PermMapService.find_violation(g, d)
        if violation is None:
            size = PermMapService.lattice_size(g, d)
            logger.warning(f"Решетка периодов слишком велика: {size}")
            return Inconclusive(f"period lattice {size} exceeds cap", 0)
        if violation == ():
            return Certified((f"exhaustive over period {PermMapService.period(g)}",))
        shifts, n = violation
        order = 0 if d is None else d + 1
        witness = {"n": n, **{f"c{k}": shift for k, shift in enumerate(shifts)}}
        logger.info(f"Полиномиальность {g} опровергнута: {witness}")
        return Refuted(order, None, (str(g),), witness)

    @classmethod
    def scalar_degree_check(cls, g: PolyMap | PermMap, d: int) -> bool:
        """
        Все (d+1)-кратные производные тождественно равны единице
        """
        if d < 0:
            raise ValidationError("Степень должна быть неотрицательной")
        if isinstance(g, PermMap):
            return PermMapService.find_violation(g, d) == ()
        current = g
        for _ in range(d + 1):
            if PolyMapService.is_identity(current):
                return True
            current = cls.symbolic_derivative(current)
        return PolyMapService.is_identity(current)


class RandomMapService:
    """
    Случайные полиномиальные отображения для проверок свойств
    """

    @staticmethod
    def weights(model: GroupModel) -> Tuple[int, ...]:
        if model.is_abelian:
            return (1,) * model.arity
        return (1, 1, 2)

    @classmethod
    def random_polynomial(cls, rng: np.random.Generator, model: GroupModel, max_weight: int,
                          density: float = 0.5, bound: int = 2) -> PolyElement:
        """
        Случайный многочлен от n взвешенной степени не выше max_weight
        """
        ring = PolyMapService.ring_for(model)
        weights = cls.weights(model)
        terms = {}
        for monom in product(range(max_weight + 1), repeat=model.arity):
            if sum(w * e for w, e in zip(weights, monom)) > max_weight:
                continue
            if rng.random() < density:
                coeff = int(rng.integers(-bound, bound + 1))
                if coeff:
                    terms[monom] = coeff
        return ring.from_dict(terms) if terms else ring.zero

    @classmethod
    def random_polynomial_map(cls, rng: np.random.Generator, model: GroupModel, dim: int, d: int) -> PolyMap:
        """
        prod E_{i,i+k}(p) с взвешенной степенью p не выше k*d: такое отображение
        полиномиально относительно refine_scalar(lcs(dim), d)
        """
        factors = []
        for k in range(1, dim):
            for i in range(1, dim - k + 1):
                factors.append((i, i + k, cls.random_polynomial(rng, model, k * d)))
        return PolyMapService.from_factors(model, dim, factors)

    @staticmethod
    def certifying_filtration(dim: int, d: int) -> Prefiltration:
        return PrefiltrationService.refine_scalar(PrefiltrationService.lcs(dim), d)

    @staticmethod
    def dihedral_fixture() -> Tuple[PermMap, PermMap]:
        """
        Две последовательности n -> s^n и n -> (s r)^n в D_3 (s - отражение,
        r - поворот) скалярной степени 1; их поточечное произведение равно r^{[n нечетно]}
        """
        model = GroupModel.zr(1)
        (n,) = PolyMapService.variables(model)
        rotation = PermElement((1, 2, 0))
        reflection = PermElement((0, 2, 1))
        base = (reflection, GroupService.mul(reflection, rotation))
        return PermMap(model, base, ((0, n),)), PermMap(model, base, ((1, n),))

