"""
Ошибки вычислительного характера.

Ошибки входных данных выражаются через django.core.exceptions.ValidationError
(см. utils.validates), здесь собраны ошибки, возникающие во время счета.
"""


class WalshlabError(Exception):
    """
    Базовая ошибка вычислений
    """


class SearchCapExceeded(WalshlabError):
    """
    Перебор достиг заданного ограничения, не найдя ответа
    """


class ResourceCapExceeded(WalshlabError):
    """
    Точное значение слишком велико для вычисления в заданных пределах
    """


class BoundOverflowError(ResourceCapExceeded):
    """
    Рекурсивная оценка сложности вышла за пределы допустимой арности
    """


class PrecisionAmbiguityError(WalshlabError):
    """
    Сравнение с порогом неразрешимо при текущей точности
    """
