import logging
import threading
from fractions import Fraction
from functools import lru_cache
from tokenize import TokenError
from typing import Callable, Dict, List, Tuple

import sympy
from django.conf import settings
from django.core.exceptions import ValidationError
from sympy.parsing.sympy_parser import convert_xor, parse_expr, standard_transformations

from folner.services import FolnerService
from polymap.models import GroupModel
from rates.deferred import Ceiling, Const, LeastPower, Node, Power, least_power_below, lift
from rates.models import CONFORMING, GrowthFunction, LadderStep, PhiHandle, RateBundle, RateProfile, TupleResult
from utils.exceptions import ResourceCapExceeded
from utils.validates import validate_positive

logger = logging.getLogger(__name__)

VARIABLE = sympy.Symbol("M", integer=True, nonnegative=True)
TRANSFORMATIONS = standard_transformations + (convert_xor,)
ALLOWED_NODES = (sympy.Integer, sympy.Symbol, sympy.Add, sympy.Mul, sympy.Pow, sympy.Max)
# Имена, нужные стандартным преобразованиям parse_expr; встроенные функции недоступны
SAFE_GLOBALS = {
    "__builtins__": {},
    "Integer": sympy.Integer,
    "Float": sympy.Float,
    "Rational": sympy.Rational,
    "Symbol": sympy.Symbol,
}


class GrowthService:
    """
    Функции роста: целые константы, M, + * ^, max(...), композиция через '@'.
    "2*M @ M^2" означает M -> 2 M^2
    """

    @staticmethod
    def _parse_stage(text: str) -> sympy.Expr:
        try:
            expr = parse_expr(
                text,
                local_dict={"M": VARIABLE, "max": sympy.Max, "Max": sympy.Max},
                global_dict=dict(SAFE_GLOBALS),
                transformations=TRANSFORMATIONS,
            )
        except (SyntaxError, TypeError, ValueError, NameError, AttributeError, TokenError,
                sympy.SympifyError) as exc:
            raise ValidationError(f"Некорректное выражение функции роста {text!r}: {exc}")

        for node in sympy.preorder_traversal(expr):
            if not isinstance(node, ALLOWED_NODES):
                raise ValidationError(f"Недопустимый элемент {node} в функции роста {text!r}")
            if isinstance(node, sympy.Symbol) and node != VARIABLE:
                raise ValidationError(f"Единственная переменная функции роста - M, получено {node}")
            if isinstance(node, sympy.Pow) and not (node.exp.is_Integer and node.exp >= 0):
                raise ValidationError(f"Показатель степени должен быть натуральным: {node}")
        return expr

    @classmethod
    def parse(cls, text: str) -> GrowthFunction:
        stages = [part.strip() for part in str(text).split("@")]
        if not all(stages):
            raise ValidationError(f"Пустая ступень композиции в {text!r}")
        exprs = [cls._parse_stage(stage) for stage in stages]

        def evaluate(n: int) -> int:
            value = n
            for expr in reversed(exprs):
                value = int(expr.subs(VARIABLE, sympy.Integer(value)))
                if value < 0:
                    raise ValidationError(f"Функция роста {text!r} отрицательна в точке {n}")
            return value

        return GrowthFunction(" @ ".join(stages), evaluate)

    @staticmethod
    def identity() -> GrowthFunction:
        return GrowthFunction("M", lambda n: n)

    @staticmethod
    def compose(outer: GrowthFunction, inner: GrowthFunction) -> GrowthFunction:
        return GrowthFunction(f"({outer}) @ ({inner})", lambda n: outer(inner(n)))

    @staticmethod
    def at_least_identity(F: GrowthFunction) -> GrowthFunction:
        """
        M -> max(F(M), M)
        """
        return GrowthFunction(f"max({F}, M)", lambda n: max(F(n), n))

    @staticmethod
    def check_nondecreasing(F: GrowthFunction, upto: int = 64) -> None:
        values = [F(n) for n in range(upto + 1)]
        for n in range(upto):
            if values[n + 1] < values[n]:
                raise ValidationError(f"Функция роста {F} убывает: F({n + 1}) < F({n})")

    @staticmethod
    def phi_handle(model: GroupModel | None = None, growth: GrowthFunction | None = None) -> Tuple[PhiHandle, bool]:
        """
        phi_gamma для вложенной рекурсии и признак условности ответа
        (поиск phi ограничен, если нет замкнутой формулы)
        """
        if growth is not None:
            return (lambda gamma, L: growth(L)), False
        if model is None or (model.is_abelian and model.rank == 1):
            return FolnerService.phi_closed_form, False
        return (lambda gamma, L: FolnerService.phi(model, gamma, L).N), True


class RateService:
    """
    Константы доказательства: delta, eta, C_i, C*, gamma^c, лестница M_i
    """

    @staticmethod
    def delta(epsilon: Fraction, profile: RateProfile = CONFORMING) -> Fraction:
        validate_positive(epsilon, "epsilon")
        if profile.delta is not None:
            return profile.delta
        return Fraction(epsilon) / 36

    @staticmethod
    def eta(epsilon: Fraction, x: Fraction) -> Fraction:
        """
        eta(x) = epsilon^2 / (216 x)
        """
        validate_positive(epsilon, "epsilon")
        validate_positive(x, "x")
        return Fraction(epsilon) ** 2 / (216 * Fraction(x))

    @classmethod
    def ladder_length(cls, epsilon: Fraction, profile: RateProfile = CONFORMING) -> int:
        """
        ceil(2 delta^-2)
        """
        if profile.ladder_length is not None:
            return profile.ladder_length
        value = 2 / cls.delta(epsilon, profile) ** 2
        return -(-value.numerator // value.denominator)

    @classmethod
    def ladder_node(cls, epsilon: Node, profile: RateProfile = CONFORMING) -> Node:
        if profile.ladder_length is not None or profile.delta is not None:
            return Const(Fraction(cls.ladder_length(Fraction(1), profile)))
        return Ceiling(Const(Fraction(2592)) / (epsilon * epsilon))

    @classmethod
    def c_star_node(cls, epsilon: Node, profile: RateProfile = CONFORMING) -> Node:
        """
        C* = C_1 = (432 / epsilon^2)^(L-1), если epsilon^2 < 432, иначе 1
        """
        ratio = Const(Fraction(432)) / (epsilon * epsilon)
        try:
            expanding = ratio.exact(settings.RATES_MAX_BITS) > 1
        except ResourceCapExceeded:
            expanding = ratio.log10 > 0
        if not expanding:
            return Const(Fraction(1))
        return Power(ratio, cls.ladder_node(epsilon, profile)) / ratio

    @classmethod
    @lru_cache(maxsize=None)
    def c_star(cls, epsilon: Fraction, profile: RateProfile = CONFORMING) -> Fraction:
        validate_positive(epsilon, "epsilon")
        try:
            return cls.c_star_node(lift(epsilon), profile).exact(settings.RATES_MAX_BITS)
        except ResourceCapExceeded:
            logger.error(f"C* для epsilon = {epsilon} превышает {settings.RATES_MAX_BITS} бит")
            raise

    @classmethod
    def c_sequence(cls, epsilon: Fraction, profile: RateProfile = CONFORMING) -> List[Fraction]:
        """
        C_L = 1, C_{i-1} = max(C_i, 2 / eta(C_i)), L = ceil(2 delta^-2). Список C_1, ..., C_L
        """
        length = cls.ladder_length(epsilon, profile)
        if length > settings.RATES_ENTRY_LIMIT:
            logger.error(f"Лестница C_i длины {length} превышает предел {settings.RATES_ENTRY_LIMIT}")
            raise ResourceCapExceeded(f"C-sequence of length {length}")
        cls.c_star(epsilon, profile)

        sequence = [Fraction(1)]
        for _ in range(length - 1):
            current = sequence[-1]
            sequence.append(max(current, 2 / cls.eta(epsilon, current)))
        sequence.reverse()
        return sequence

    @classmethod
    def gamma_one(cls, epsilon: Fraction, profile: RateProfile = CONFORMING) -> Fraction:
        """
        gamma^1(epsilon) = epsilon / (24 C*)
        """
        return Fraction(epsilon) / (24 * cls.c_star(epsilon, profile))

    @classmethod
    def gamma_node(cls, epsilon, c: int, profile: RateProfile = CONFORMING) -> Node:
        value = lift(epsilon)
        for _ in range(c):
            value = value / (24 * cls.c_star_node(value, profile))
        return value

    @classmethod
    def gamma_iter(cls, epsilon: Fraction, c: int, profile: RateProfile = CONFORMING) -> Fraction:
        """
        gamma^{c+1}(epsilon) = gamma^c(gamma^1(epsilon)), gamma^0(epsilon) = epsilon
        """
        validate_positive(epsilon, "epsilon")
        if c < 0:
            raise ValidationError("Сложность c должна быть неотрицательной")
        value = Fraction(epsilon)
        for _ in range(c):
            value = cls.gamma_one(value, profile)
        return value

    @classmethod
    def bundle(cls, epsilon: Fraction, c: int, profile: RateProfile = CONFORMING) -> RateBundle:
        gammas = tuple(cls.gamma_iter(epsilon, level, profile) for level in range(1, c + 1))
        return RateBundle(
            epsilon=Fraction(epsilon),
            delta=cls.delta(epsilon, profile),
            eta_coefficient=Fraction(epsilon) ** 2 / 216,
            ladder_length=cls.ladder_length(epsilon, profile),
            c_star=cls.c_star(epsilon, profile),
            gammas=gammas,
            profile=profile,
        )

    @classmethod
    def structure_sequence(cls, epsilon: Fraction, omega: GrowthFunction, psi: GrowthFunction, M_bullet: int,
                           profile: RateProfile = CONFORMING) -> List[LadderStep]:
        """
        A_1 = M_bullet, M_i = omega(A_i), B_i = psi(M_i), A_{i+1} = B_i.
        omega и psi заменяются на max(., M), поэтому лестница не убывает
        """
        if M_bullet < 0:
            raise ValidationError("M_bullet должно быть натуральным")
        length = cls.ladder_length(epsilon, profile)
        if length > settings.RATES_ENTRY_LIMIT:
            logger.error(f"Лестница длины {length} превышает предел {settings.RATES_ENTRY_LIMIT}")
            raise ResourceCapExceeded(f"ladder of length {length}")

        steps: List[LadderStep] = []
        A = M_bullet
        for _ in range(length):
            M = max(omega(A), A)
            B = max(psi(M), M)
            steps.append(LadderStep(A, M, B))
            A = B
        return steps

    @staticmethod
    def r_min(K: int, gamma: Fraction) -> int:
        """
        Наименьшее r с ((K-1)/K)^r < gamma, сравнение в целых числах
        """
        if K < 1:
            raise ValidationError("K должно быть не меньше 1")
        if not 0 < gamma < 1:
            raise ValidationError("gamma должно лежать в (0, 1)")
        return least_power_below(K, Fraction(gamma), settings.RATES_MAX_BITS)


class TupleRecursion:
    """
    Ленивое вычисление кортежей M^{c,eps,F}_i и чисел N_{c,eps,F}(M~).

    Теорема (c, eps, F, M): лестница M_1..M_L с psi = N_{c-1,eps,F}, затем
    кортежи утверждения (c-1, eps, F, M_i) подряд.
    Утверждение (c, eps, F, M~): gamma = gamma^1(eps), K = K_{c,gamma}, r = r_min(K, gamma),
    F_r = F, F_{s-1}(M) = max_i F_s(M^{c,gamma,F_s}_i), элементы
    M~^{(i_1..i_s)} = (M~^{(i_1..i_{s-1})})^{c,gamma,F_s}_{i_s}, N = max phi_gamma(F(M~^{(i_1..i_r)})).
    """

    def __init__(self, phi: PhiHandle, profile: RateProfile = CONFORMING):
        self.phi = phi
        self.profile = profile
        self._lock = threading.RLock()
        self._memo: Dict[tuple, object] = {}

    def _cached(self, key: tuple, compute: Callable[[], object]):
        with self._lock:
            if key not in self._memo:
                self._memo[key] = compute()
            return self._memo[key]

    def _prop_shape(self, c: int, epsilon: Fraction) -> Tuple[Fraction, int, int]:
        gamma = RateService.gamma_one(epsilon, self.profile)
        K = TupleService.count(c, gamma, self.profile)
        return gamma, K, RateService.r_min(K, gamma)

    def ladder(self, c: int, epsilon: Fraction, F: GrowthFunction, M: int) -> List[LadderStep]:
        def compute():
            psi = GrowthFunction(f"N[{c - 1};{epsilon}]({F})", lambda m: self.prop_N(c - 1, epsilon, F, m))
            return RateService.structure_sequence(epsilon, GrowthService.identity(), psi, M, self.profile)

        return self._cached(("ladder", c, epsilon, F.text, M), compute)

    def level(self, c: int, epsilon: Fraction, F: GrowthFunction, s: int) -> GrowthFunction:
        """
        F_s для утверждения (c, eps, F)
        """
        gamma, K, r = self._prop_shape(c, epsilon)
        if s == r:
            return F

        def compute():
            upper = self.level(c, epsilon, F, s + 1)
            name = f"F{s}[{c};{epsilon}]({F})"

            def evaluate(m: int) -> int:
                return self._cached(
                    ("level", name, m),
                    lambda: max(upper(self.theorem_entry(c, gamma, upper, m, i)) for i in range(K)),
                )

            return GrowthFunction(name, evaluate)

        return self._cached(("levels", c, epsilon, F.text, s), compute)

    def theorem_entry(self, c: int, epsilon: Fraction, F: GrowthFunction, M: int, index: int) -> int:
        if c == 0:
            return M
        block = TupleService.prop_count(c - 1, epsilon, self.profile)
        i, k = divmod(index, block)
        return self.prop_entry(c - 1, epsilon, F, self.ladder(c, epsilon, F, M)[i].M, k)

    def theorem_entries(self, c: int, epsilon: Fraction, F: GrowthFunction, M: int) -> List[int]:
        if c == 0:
            return [M]
        entries: List[int] = []
        for step in self.ladder(c, epsilon, F, M):
            entries.extend(self.prop_entries(c - 1, epsilon, F, step.M))
        return entries

    def theorem_N(self, c: int, epsilon: Fraction, F: GrowthFunction, M: int) -> int | None:
        if c == 0:
            return None
        return max(step.B for step in self.ladder(c, epsilon, F, M))

    def prop_entry(self, c: int, epsilon: Fraction, F: GrowthFunction, M: int, index: int) -> int:
        gamma, K, r = self._prop_shape(c, epsilon)
        digits = []
        for _ in range(r):
            index, digit = divmod(index, K)
            digits.append(digit)
        value = M
        for s, digit in enumerate(reversed(digits), start=1):
            value = self.theorem_entry(c, gamma, self.level(c, epsilon, F, s), value, digit)
        return value

    def prop_entries(self, c: int, epsilon: Fraction, F: GrowthFunction, M: int) -> List[int]:
        def compute():
            gamma, K, r = self._prop_shape(c, epsilon)
            if TupleService.prop_count(c, epsilon, self.profile) > settings.RATES_ENTRY_LIMIT:
                raise ResourceCapExceeded(f"{K}^{r} entries exceed {settings.RATES_ENTRY_LIMIT}")
            values = [M]
            for s in range(1, r + 1):
                upper = self.level(c, epsilon, F, s)
                values = [self.theorem_entry(c, gamma, upper, value, i) for value in values for i in range(K)]
            return values

        return self._cached(("prop", c, epsilon, F.text, M), compute)

    def prop_N(self, c: int, epsilon: Fraction, F: GrowthFunction, M: int) -> int:
        gamma = RateService.gamma_one(epsilon, self.profile)
        return self._cached(
            ("N", c, epsilon, F.text, M),
            lambda: max(self.phi(gamma, F(entry)) for entry in self.prop_entries(c, epsilon, F, M)),
        )


class TupleService:
    """
    Размеры K_{c,eps} и K~_{c,eps} кортежей, сами кортежи в точном и отложенном режиме
    """

    @classmethod
    @lru_cache(maxsize=None)
    def count(cls, c: int, epsilon: Fraction, profile: RateProfile = CONFORMING) -> int:
        """
        K_{0,eps} = 1, K_{c,eps} = ceil(2 delta^-2) * K~_{c-1,eps}
        """
        if c < 0:
            raise ValidationError("Сложность c должна быть неотрицательной")
        if c == 0:
            return 1
        return RateService.ladder_length(epsilon, profile) * cls.prop_count(c - 1, epsilon, profile)

    @classmethod
    @lru_cache(maxsize=None)
    def prop_count(cls, c: int, epsilon: Fraction, profile: RateProfile = CONFORMING) -> int:
        """
        K~_{c,eps} = K_{c,gamma}^r, gamma = gamma^1(eps), ((K-1)/K)^r < gamma
        """
        gamma = RateService.gamma_one(epsilon, profile)
        K = cls.count(c, gamma, profile)
        r = RateService.r_min(K, gamma)
        if r * K.bit_length() > settings.RATES_MAX_BITS:
            raise ResourceCapExceeded(f"K~ = {K}^{r} exceeds {settings.RATES_MAX_BITS} bits")
        return K ** r

    @classmethod
    def count_node(cls, c: int, epsilon, profile: RateProfile = CONFORMING) -> Node:
        epsilon = lift(epsilon)
        if c == 0:
            return Const(Fraction(1))
        return RateService.ladder_node(epsilon, profile) * cls.prop_count_node(c - 1, epsilon, profile)

    @classmethod
    def prop_count_node(cls, c: int, epsilon, profile: RateProfile = CONFORMING) -> Node:
        gamma = RateService.gamma_node(epsilon, 1, profile)
        K = cls.count_node(c, gamma, profile)
        return Power(K, LeastPower(K, gamma))

    @staticmethod
    def _deferred(node: Node) -> Dict[str, object]:
        try:
            report = node.describe(settings.RATES_MAX_BITS)
        except ResourceCapExceeded as exc:
            logger.warning(f"Даже порядок числа недоступен: {exc}")
            report = {"log10": None, "digits": None}
        expression = str(node)
        if len(expression) <= 2000:
            report["expression"] = expression
        return report

    @classmethod
    def _build(cls, c: int, epsilon: Fraction, F: GrowthFunction, M: int, mode: str, proposition: bool,
               model: GroupModel | None, phi_growth: GrowthFunction | None,
               profile: RateProfile) -> TupleResult:
        validate_positive(epsilon, "epsilon")
        if c < 0 or M < 0:
            raise ValidationError("Сложность и M должны быть неотрицательными")
        if mode not in ("exact", "deferred"):
            raise ValidationError(f"Неизвестный режим {mode}")
        epsilon = Fraction(epsilon)
        phi, conditional = GrowthService.phi_handle(model, phi_growth)
        what = "Утверждение" if proposition else "Теорема"
        logger.debug(f"{what}: c={c}, epsilon={epsilon}, F={F}, M={M}, режим {mode}")

        count_of = cls.prop_count if proposition else cls.count
        node_of = cls.prop_count_node if proposition else cls.count_node
        try:
            count = count_of(c, epsilon, profile)
        except ResourceCapExceeded:
            logger.warning(f"{what}: размер кортежа (c={c}, epsilon={epsilon}) отложен")
            return TupleResult(c, epsilon, M, None, deferred=cls._deferred(node_of(c, epsilon, profile)),
                               conditional=conditional)

        if mode == "deferred" or count > settings.RATES_ENTRY_LIMIT:
            if mode == "exact":
                logger.warning(f"{what}: {count} элементов превышают предел {settings.RATES_ENTRY_LIMIT}")
            return TupleResult(c, epsilon, M, count, deferred={"digits": len(str(count))},
                               conditional=conditional)

        recursion = TupleRecursion(phi, profile)
        try:
            if proposition:
                entries = recursion.prop_entries(c, epsilon, F, M)
                N = recursion.prop_N(c, epsilon, F, M)
            else:
                entries = recursion.theorem_entries(c, epsilon, F, M)
                N = recursion.theorem_N(c, epsilon, F, M)
        except ResourceCapExceeded as exc:
            logger.warning(f"{what}: элементы кортежа отложены ({exc})")
            return TupleResult(c, epsilon, M, count, deferred={"digits": len(str(count))},
                               conditional=conditional)

        logger.info(f"{what}: c={c}, epsilon={epsilon}: {count} элементов, N = {N}")
        return TupleResult(c, epsilon, M, count, tuple(entries), N, conditional=conditional)

    @classmethod
    def main_tuple(cls, c: int, epsilon: Fraction, F: GrowthFunction, M: int, mode: str = "exact",
                   model: GroupModel | None = None, phi_growth: GrowthFunction | None = None,
                   profile: RateProfile = CONFORMING) -> TupleResult:
        return cls._build(c, epsilon, F, M, mode, False, model, phi_growth, profile)

    @classmethod
    def prop_tuple(cls, c: int, epsilon: Fraction, F: GrowthFunction, M: int, mode: str = "exact",
                   model: GroupModel | None = None, phi_growth: GrowthFunction | None = None,
                   profile: RateProfile = CONFORMING) -> TupleResult:
        return cls._build(c, epsilon, F, M, mode, True, model, phi_growth, profile)
