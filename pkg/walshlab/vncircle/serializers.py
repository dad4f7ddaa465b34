import mpmath
from django.core.exceptions import ValidationError as DjangoValidationError
from rest_framework import serializers

from rates.serializers import GrowthField
from utils.serializers import RationalField, StrictSerializer
from vncircle.models import AtomicMeasure, CircleObservable


class AtomicMeasureSerializer(StrictSerializer):
    """
    {"angles": ["0", "1/4"], "weights": ["1/2", "1/2"]}, углы в оборотах
    """

    angles = serializers.ListField(child=RationalField(), allow_empty=False)
    weights = serializers.ListField(child=RationalField(), allow_empty=False)

    def validate(self, attrs):
        try:
            attrs["instance"] = AtomicMeasure(tuple(attrs["angles"]), tuple(attrs["weights"]))
        except DjangoValidationError as exc:
            raise serializers.ValidationError(exc.messages)
        return attrs


class CircleObservableField(serializers.Field):
    """
    Значения f на атомах: список пар ["re", "im"] десятичных строк
    """

    def to_internal_value(self, data):
        if not isinstance(data, list):
            raise serializers.ValidationError("Ожидался список пар [re, im]")
        values = []
        for pair in data:
            if not isinstance(pair, list) or len(pair) != 2 or not all(isinstance(x, str) for x in pair):
                raise serializers.ValidationError(f"Некорректное значение {pair!r}")
            try:
                values.append(mpmath.mpc(mpmath.mpf(pair[0]), mpmath.mpf(pair[1])))
            except (ValueError, TypeError):
                raise serializers.ValidationError(f"Некорректное число {pair!r}")
        return CircleObservable(tuple(values))

    def to_representation(self, value):
        return [[mpmath.nstr(v.real, 30), mpmath.nstr(v.imag, 30)] for v in value.values]


class VnSweepSerializer(StrictSerializer):
    epsilon = RationalField()
    growth = GrowthField()
    m0 = serializers.IntegerField(min_value=1, default=1)
    cases = serializers.IntegerField(min_value=1, default=1000)
    seed = serializers.IntegerField(min_value=0, max_value=2 ** 64 - 1, default=0)
    max_atoms = serializers.IntegerField(min_value=1, max_value=256, default=50)

    def validate_epsilon(self, value):
        if not 0 < value <= 2:
            raise serializers.ValidationError("epsilon должно лежать в (0, 2]")
        return value


class VnCaseSerializer(StrictSerializer):
    """
    Одна мера и функция: разложение f = sigma + u + v и проверка метастабильности
    """

    epsilon = RationalField()
    growth = GrowthField()
    m0 = serializers.IntegerField(min_value=1, default=1)
    measure = AtomicMeasureSerializer()
    f = CircleObservableField()

    def validate(self, attrs):
        if len(attrs["f"]) != attrs["measure"]["instance"].size:
            raise serializers.ValidationError("Число значений f не совпадает с числом атомов")
        if not 0 < attrs["epsilon"] <= 2:
            raise serializers.ValidationError("epsilon должно лежать в (0, 2]")
        return attrs
