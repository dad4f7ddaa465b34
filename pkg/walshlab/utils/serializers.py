from django.core.exceptions import ValidationError as DjangoValidationError
from rest_framework import serializers

from utils.rationals import format_rational, parse_rational


class RationalField(serializers.Field):
    """
    Поле для точных рациональных чисел.
    В JSON рациональное число всегда записывается строкой "p/q".
    """

    default_error_messages = {"invalid": "Некорректное рациональное число: {value}"}

    def to_internal_value(self, data):
        try:
            return parse_rational(data)
        except DjangoValidationError:
            self.fail("invalid", value=data)

    def to_representation(self, value):
        return format_rational(value)


class StrictSerializer(serializers.Serializer):
    """
    Схема, отклоняющая неизвестные поля
    """

    def to_internal_value(self, data):
        if isinstance(data, dict):
            unknown = sorted(set(data) - set(self.fields))
            if unknown:
                raise serializers.ValidationError(
                    {name: "Неизвестное поле" for name in unknown}
                )
        return super().to_internal_value(data)
