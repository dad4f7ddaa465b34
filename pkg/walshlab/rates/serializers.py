from django.core.exceptions import ValidationError as DjangoValidationError
from rest_framework import serializers

from polymap.serializers import GroupModelSerializer
from rates.models import RateProfile
from rates.services import GrowthService
from utils.serializers import RationalField, StrictSerializer


class GrowthField(serializers.Field):
    """
    Функция роста, записанная выражением, например "2*M" или "M^2 @ M+1"
    """

    def to_internal_value(self, data):
        if not isinstance(data, str):
            raise serializers.ValidationError("Функция роста задается строкой")
        try:
            return GrowthService.parse(data)
        except DjangoValidationError as exc:
            raise serializers.ValidationError(exc.messages)

    def to_representation(self, value):
        return str(value)


class RatesSerializer(StrictSerializer):
    epsilon = RationalField()
    complexity = serializers.IntegerField(min_value=0)
    growth = GrowthField()
    m = serializers.IntegerField(min_value=0, default=1)
    mode = serializers.ChoiceField(choices=["exact", "deferred"], default="exact")
    proposition = serializers.BooleanField(default=False)
    model = GroupModelSerializer(required=False)
    phi = GrowthField(required=False)
    delta_override = RationalField(required=False)
    ladder_override = serializers.IntegerField(min_value=1, required=False)

    def validate_epsilon(self, value):
        if value <= 0:
            raise serializers.ValidationError("epsilon должно быть положительным")
        return value

    def validate(self, attrs):
        try:
            attrs["profile"] = RateProfile(attrs.get("delta_override"), attrs.get("ladder_override"))
            GrowthService.check_nondecreasing(attrs["growth"])
        except DjangoValidationError as exc:
            raise serializers.ValidationError(exc.messages)
        return attrs
