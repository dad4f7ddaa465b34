from django.core.exceptions import ValidationError as DjangoValidationError
from rest_framework import serializers

from nilgroup.models import PERM_KIND, PermElement, Prefiltration, UT_KIND, UTElement
from utils.serializers import StrictSerializer


class UTSerializer(StrictSerializer):
    dim = serializers.IntegerField(min_value=1)
    entries = serializers.ListField(child=serializers.ListField(child=serializers.IntegerField()))


class GroupElementSerializer(StrictSerializer):
    """
    Схема элемента группы.

    Формат: {"ut": {"dim": n, "entries": [[...]]}} либо {"perm": [образы]}
    """

    ut = UTSerializer(required=False)
    perm = serializers.ListField(child=serializers.IntegerField(min_value=0), required=False)

    def validate(self, attrs):
        if ("ut" in attrs) == ("perm" in attrs):
            raise serializers.ValidationError("Нужно указать ровно одно из полей: ut или perm")
        try:
            if "ut" in attrs:
                ut = attrs["ut"]
                attrs["element"] = UTElement(ut["dim"], tuple(tuple(row) for row in ut["entries"]))
            else:
                attrs["element"] = PermElement(tuple(attrs["perm"]))
        except DjangoValidationError as exc:
            raise serializers.ValidationError(exc.messages)
        return attrs

    def to_representation(self, instance):
        if isinstance(instance, UTElement):
            return {"ut": {"dim": instance.dim, "entries": [list(row) for row in instance.entries]}}
        return {"perm": list(instance.images)}


class PrefiltrationSerializer(StrictSerializer):
    """
    Схема префильтрации: сдвиги наддиагоналей по уровням
    """

    dim = serializers.IntegerField(min_value=1)
    levels = serializers.ListField(child=serializers.IntegerField(min_value=1))
    kind = serializers.ChoiceField(choices=[UT_KIND, PERM_KIND], default=UT_KIND)

    def validate(self, attrs):
        try:
            attrs["prefiltration"] = Prefiltration(attrs["dim"], tuple(attrs["levels"]), attrs["kind"])
        except DjangoValidationError as exc:
            raise serializers.ValidationError(exc.messages)
        return attrs

    def to_representation(self, instance):
        return {"dim": instance.dim, "levels": list(instance.offsets), "kind": instance.kind}
