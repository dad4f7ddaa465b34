"""
Отложенные вычисления констант.

Узлы образуют ациклический граф выражений над положительными рациональными
числами. Точное значение вычисляется по требованию с ограничением на размер
в битах, оценка порядка (log10) доступна всегда через mpmath.
"""

import logging
import threading
from fractions import Fraction
from functools import cached_property
from typing import Any, Dict

import mpmath

from utils.exceptions import ResourceCapExceeded
from utils.rationals import format_rational

logger = logging.getLogger(__name__)

# Порядок, выше которого само число уже не представляется в mpmath
TOWER_LOG10_CAP = 10 ** 6

# Число цифр, начиная с которого количество цифр выводится только оценкой
DIGITS_EXACT_CAP = 10 ** 18

WORKING_DPS = 40


def least_power_below(K: int, gamma: Fraction, max_bits: int) -> int:
    """
    Наименьшее r с ((K-1)/K)^r < gamma. Сравнение точное:
    (K-1)^r * q < p * K^r для gamma = p/q
    """
    if K == 1:
        return 1

    def below(r: int) -> bool:
        if r * K.bit_length() > max_bits:
            raise ResourceCapExceeded(f"((K-1)/K)^{r} for K={K} exceeds {max_bits} bits")
        return (K - 1) ** r * gamma.denominator < gamma.numerator * K ** r

    high = 1
    while not below(high):
        high *= 2
    low = high // 2 + 1 if high > 1 else 1
    while low < high:
        middle = (low + high) // 2
        if below(middle):
            high = middle
        else:
            low = middle + 1
    return low


def lift(value) -> "Node":
    if isinstance(value, Node):
        return value
    return Const(Fraction(value))


class Node:
    """
    Узел выражения. exact(max_bits) - точное значение либо ResourceCapExceeded,
    log10 - оценка десятичного порядка
    """

    def __init__(self):
        self._lock = threading.Lock()
        self._exact: Fraction | None = None

    def exact(self, max_bits: int) -> Fraction:
        with self._lock:
            if self._exact is None:
                self._exact = self._evaluate(max_bits)
            value = self._exact
        size = max(value.numerator.bit_length(), value.denominator.bit_length())
        if size > max_bits:
            raise ResourceCapExceeded(f"value needs {size} bits > {max_bits}")
        return value

    def _evaluate(self, max_bits: int) -> Fraction:
        raise NotImplementedError

    @cached_property
    def log10(self) -> mpmath.mpf:
        with mpmath.workdps(WORKING_DPS):
            return self._log10()

    def _log10(self) -> mpmath.mpf:
        raise NotImplementedError

    def magnitude(self) -> mpmath.mpf:
        level = self.log10
        if level > TOWER_LOG10_CAP:
            raise ResourceCapExceeded(f"number has about 10^{mpmath.nstr(level, 5)} digits")
        with mpmath.workdps(WORKING_DPS):
            return mpmath.power(10, level)

    def digits(self) -> int | None:
        """
        Число десятичных цифр целой части max(x, 1/x), None - если оно само слишком велико
        """
        level = abs(self.log10)
        if level >= DIGITS_EXACT_CAP:
            return None
        return int(mpmath.floor(level)) + 1

    def describe(self, max_bits: int) -> Dict[str, Any]:
        report: Dict[str, Any] = {"log10": mpmath.nstr(self.log10, 20), "digits": self.digits()}
        try:
            report["value"] = format_rational(self.exact(max_bits))
        except ResourceCapExceeded:
            logger.warning(f"Точное значение отложено: порядок 10^{report['log10']}")
        return report

    def __add__(self, other):
        return Sum(self, lift(other))

    def __mul__(self, other):
        return Product(self, lift(other))

    def __rmul__(self, other):
        return Product(lift(other), self)

    def __truediv__(self, other):
        return Quotient(self, lift(other))

    def __rtruediv__(self, other):
        return Quotient(lift(other), self)

    def __pow__(self, exponent):
        return Power(self, lift(exponent))


class Const(Node):
    def __init__(self, value: Fraction):
        super().__init__()
        if value <= 0:
            raise ValueError("Отложенные выражения определены только для положительных чисел")
        self.value = value

    def _evaluate(self, max_bits):
        return self.value

    def _log10(self):
        return mpmath.log10(mpmath.mpf(self.value.numerator)) - mpmath.log10(mpmath.mpf(self.value.denominator))

    def __str__(self):
        return format_rational(self.value)


class Binary(Node):
    symbol = "?"

    def __init__(self, left: Node, right: Node):
        super().__init__()
        self.left, self.right = left, right

    def __str__(self):
        return f"({self.left} {self.symbol} {self.right})"


class Sum(Binary):
    symbol = "+"

    def _evaluate(self, max_bits):
        return self.left.exact(max_bits) + self.right.exact(max_bits)

    def _log10(self):
        high, low = sorted((self.left.log10, self.right.log10), reverse=True)
        if high - low > WORKING_DPS:
            return high
        return high + mpmath.log10(1 + mpmath.power(10, low - high))


class Product(Binary):
    symbol = "*"

    def _evaluate(self, max_bits):
        return self.left.exact(max_bits) * self.right.exact(max_bits)

    def _log10(self):
        return self.left.log10 + self.right.log10


class Quotient(Binary):
    symbol = "/"

    def _evaluate(self, max_bits):
        return self.left.exact(max_bits) / self.right.exact(max_bits)

    def _log10(self):
        return self.left.log10 - self.right.log10


class Power(Binary):
    """
    base^exponent с целым неотрицательным показателем
    """

    symbol = "^"

    def _evaluate(self, max_bits):
        base = self.left.exact(max_bits)
        exponent = self.right.exact(max_bits)
        if exponent.denominator != 1:
            raise ValueError(f"Показатель {exponent} не целый")
        exponent = int(exponent)
        size = exponent * max(base.numerator.bit_length(), base.denominator.bit_length())
        if size > max_bits:
            raise ResourceCapExceeded(f"power needs about {size} bits > {max_bits}")
        return base ** exponent

    def _log10(self):
        return self.right.magnitude() * self.left.log10


class Ceiling(Node):
    def __init__(self, argument: Node):
        super().__init__()
        self.argument = argument

    def _evaluate(self, max_bits):
        value = self.argument.exact(max_bits)
        return Fraction(-(-value.numerator // value.denominator))

    def _log10(self):
        level = self.argument.log10
        if level > 15:
            return level
        return mpmath.log10(mpmath.ceil(self.argument.magnitude()))

    def __str__(self):
        return f"ceil({self.argument})"


class LeastPower(Node):
    """
    Наименьшее r с ((K-1)/K)^r < gamma. Для оценки порядка
    r ~ ln(1/gamma) / -ln(1 - 1/K), при больших K - K ln(1/gamma)
    """

    def __init__(self, K: Node, gamma: Node):
        super().__init__()
        self.K, self.gamma = K, gamma

    def _evaluate(self, max_bits):
        K = self.K.exact(max_bits)
        if K.denominator != 1:
            raise ValueError(f"K = {K} не целое")
        return Fraction(least_power_below(int(K), self.gamma.exact(max_bits), max_bits))

    def _log10(self):
        log_inverse_gamma = -self.gamma.log10 * mpmath.log(10)
        if self.K.log10 > 30:
            return self.K.log10 + mpmath.log10(log_inverse_gamma)
        K = self.K.magnitude()
        if K < 2:
            return mpmath.mpf(0)
        r = mpmath.ceil(log_inverse_gamma / -mpmath.log1p(-1 / K))
        return mpmath.log10(max(r, 1))

    def __str__(self):
        return f"rmin({self.K}, {self.gamma})"
