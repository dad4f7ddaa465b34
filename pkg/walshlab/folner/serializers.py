from django.core.exceptions import ValidationError as DjangoValidationError
from rest_framework import serializers

from folner.models import FolnerSet
from polymap.serializers import GroupModelSerializer
from utils.serializers import RationalField, StrictSerializer


class FolnerSetSerializer(StrictSerializer):
    """
    Схема a F_N b: {"model": {...}, "N": 5, "a": [...], "b": [...]}
    """

    model = GroupModelSerializer()
    N = serializers.IntegerField(min_value=1)
    a = serializers.ListField(child=serializers.IntegerField(), required=False, allow_null=True)
    b = serializers.ListField(child=serializers.IntegerField(), required=False, allow_null=True)

    def validate(self, attrs):
        shifts = [tuple(attrs[key]) if attrs.get(key) is not None else None for key in ("a", "b")]
        try:
            attrs["instance"] = FolnerSet(attrs["model"]["instance"], attrs["N"], *shifts)
        except DjangoValidationError as exc:
            raise serializers.ValidationError(exc.messages)
        return attrs


class PhiSerializer(StrictSerializer):
    model = GroupModelSerializer()
    gamma = RationalField()
    L = serializers.IntegerField(min_value=1)
    Ns = serializers.ListField(child=serializers.IntegerField(min_value=1), default=list)
    search_cap = serializers.IntegerField(min_value=1, required=False)

    def validate_gamma(self, value):
        if value <= 0:
            raise serializers.ValidationError("gamma должно быть положительным")
        return value


class CeilSerializer(StrictSerializer):
    left = FolnerSetSerializer()
    right = FolnerSetSerializer()
    gamma = RationalField()
    search_cap = serializers.IntegerField(min_value=1, required=False)

    def validate(self, attrs):
        if attrs["gamma"] <= 0:
            raise serializers.ValidationError("gamma должно быть положительным")
        if attrs["left"]["instance"].model != attrs["right"]["instance"].model:
            raise serializers.ValidationError("Множества должны лежать в одной группе")
        return attrs
