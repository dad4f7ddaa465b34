from django.core.exceptions import ValidationError as DjangoValidationError
from rest_framework import serializers

from dynamics.models import FiniteMPSpace
from dynamics.services import ActionService, ObservableService
from folner.serializers import FolnerSetSerializer
from polymap.serializers import PolyMapSerializer
from rates.serializers import GrowthField
from systems.services import SystemService
from utils.serializers import RationalField, StrictSerializer

FIXTURES = ("rotation", "heisenberg", "torus")


class SpaceSerializer(StrictSerializer):
    """
    {"weights": ["1/2", "1/4", "1/4"]} либо {"size": 4} для равномерной меры
    """

    weights = serializers.ListField(child=RationalField(), required=False, min_length=1)
    size = serializers.IntegerField(min_value=1, required=False)

    def validate(self, attrs):
        try:
            if "weights" in attrs:
                attrs["instance"] = FiniteMPSpace(tuple(attrs["weights"]))
            elif "size" in attrs:
                attrs["instance"] = FiniteMPSpace.uniform(attrs["size"])
            else:
                raise serializers.ValidationError("Нужно указать weights или size")
        except DjangoValidationError as exc:
            raise serializers.ValidationError(exc.messages)
        return attrs


class GeneratorSerializer(StrictSerializer):
    position = serializers.ListField(child=serializers.IntegerField(min_value=1), min_length=2, max_length=2)
    images = serializers.ListField(child=serializers.IntegerField(min_value=0), min_length=1)


class ActionSerializer(StrictSerializer):
    """
    Явное действие {"space": ..., "dim": 3, "generators": [{"position": [1, 2], "images": [...]}]}
    либо готовое {"fixture": "heisenberg", "q": 3}
    """

    fixture = serializers.ChoiceField(choices=FIXTURES, required=False)
    q = serializers.IntegerField(min_value=1, required=False)
    l = serializers.IntegerField(min_value=1, default=1)
    space = SpaceSerializer(required=False)
    dim = serializers.IntegerField(min_value=2, required=False)
    generators = GeneratorSerializer(many=True, required=False)

    def validate(self, attrs):
        try:
            if "fixture" in attrs:
                if "q" not in attrs:
                    raise serializers.ValidationError("Для готового действия нужен q")
                q = attrs["q"]
                attrs["instance"] = {
                    "rotation": lambda: ActionService.rotation(q),
                    "heisenberg": lambda: ActionService.heisenberg(q),
                    "torus": lambda: ActionService.torus(q, attrs["l"]),
                }[attrs["fixture"]]()
            else:
                if "space" not in attrs or "dim" not in attrs:
                    raise serializers.ValidationError("Нужно указать fixture либо space и dim")
                generators = {tuple(item["position"]): item["images"] for item in attrs.get("generators", [])}
                attrs["instance"] = ActionService.build(attrs["space"]["instance"], attrs["dim"], generators)
        except DjangoValidationError as exc:
            raise serializers.ValidationError(exc.messages)
        return attrs


class ShiftSerializer(StrictSerializer):
    a = serializers.ListField(child=serializers.IntegerField(), required=False, allow_null=True)
    b = serializers.ListField(child=serializers.IntegerField(), required=False, allow_null=True)

    def to_internal_value(self, data):
        attrs = super().to_internal_value(data)
        return tuple(tuple(attrs[key]) if attrs.get(key) is not None else None for key in ("a", "b"))


class AverageJobSerializer(StrictSerializer):
    """
    Общая часть simulate и scan: действие, система (g_1, ..., g_j) и функции f_0, ..., f_j
    """

    action = ActionSerializer()
    maps = PolyMapSerializer(many=True, allow_empty=False)
    observables = serializers.ListField(child=serializers.ListField(child=RationalField()), min_length=1)
    exact = serializers.BooleanField(default=True)

    def validate(self, attrs):
        action = attrs["action"]["instance"]
        try:
            attrs["system"] = SystemService.build([item["map"] for item in attrs["maps"]])
            attrs["fs"] = [ObservableService.make(action.space, values, attrs["exact"]) for values in attrs["observables"]]
        except DjangoValidationError as exc:
            raise serializers.ValidationError(exc.messages)
        if len(attrs["fs"]) != attrs["system"].j + 1:
            raise serializers.ValidationError("Число функций должно быть равно j + 1")
        if attrs["system"].dim != action.dim:
            raise serializers.ValidationError("Размерность системы не совпадает с действием")
        return attrs


class SimulateSerializer(AverageJobSerializer):
    sets = FolnerSetSerializer(many=True, default=list)
    limit = serializers.BooleanField(default=True)
    horizon = serializers.IntegerField(min_value=1, default=64)

    def validate(self, attrs):
        attrs = super().validate(attrs)
        if any(item["instance"].model != attrs["system"].model for item in attrs["sets"]):
            raise serializers.ValidationError("Множества Фёльнера должны лежать в области системы")
        return attrs


class ScanSerializer(AverageJobSerializer):
    epsilon = RationalField()
    growth = GrowthField()
    M_from = serializers.IntegerField(min_value=1, default=1)
    M_to = serializers.IntegerField(min_value=1)
    shifts = ShiftSerializer(many=True, default=list)
    gamma = RationalField(required=False)

    def validate(self, attrs):
        attrs = super().validate(attrs)
        if attrs["epsilon"] <= 0:
            raise serializers.ValidationError("epsilon должно быть положительным")
        if attrs.get("gamma") is not None and attrs["gamma"] <= 0:
            raise serializers.ValidationError("gamma должно быть положительным")
        if attrs["M_to"] < attrs["M_from"]:
            raise serializers.ValidationError("Пустое окно M")
        arity = attrs["system"].model.arity
        if any(s is not None and len(s) != arity for shift in attrs["shifts"] for s in shift):
            raise serializers.ValidationError(f"Сдвиги должны иметь {arity} координат")
        return attrs
