from django.core.exceptions import ValidationError as DjangoValidationError
from rest_framework import serializers

from polymap.serializers import PolyMapSerializer
from systems.services import SystemService
from utils.serializers import StrictSerializer


class SystemSerializer(StrictSerializer):
    """
    Схема системы: {"maps": [g_1, ..., g_j]}, g_0 = 1 добавляется автоматически.
    "length" - длина префильтрации, для которой отображения полиномиальны
    (null - минус бесконечность), по ней выбирается бюджет c(d, j).
    """

    maps = PolyMapSerializer(many=True, allow_empty=False)
    length = serializers.IntegerField(min_value=0, allow_null=True, required=False)
    budget = serializers.IntegerField(min_value=0, required=False)
    right = serializers.BooleanField(default=False)

    def validate(self, attrs):
        try:
            attrs["system"] = SystemService.build([item["map"] for item in attrs["maps"]])
        except DjangoValidationError as exc:
            raise serializers.ValidationError(exc.messages)
        if "budget" not in attrs and "length" not in attrs:
            raise serializers.ValidationError("Нужно указать budget или length")
        return attrs


class AntihomSystemSerializer(StrictSerializer):
    """
    Попарно коммутирующие антигомоморфизмы g_1, ..., g_j
    """

    antihomomorphisms = PolyMapSerializer(many=True, allow_empty=False)
    budget = serializers.IntegerField(min_value=0, required=False)

    def validate(self, attrs):
        try:
            attrs["system"] = SystemService.commuting_antihom_system(
                [item["map"] for item in attrs["antihomomorphisms"]]
            )
        except DjangoValidationError as exc:
            raise serializers.ValidationError(exc.messages)
        attrs.setdefault("budget", len(attrs["antihomomorphisms"]))
        return attrs
