from django.core.exceptions import ValidationError as DjangoValidationError
from rest_framework import serializers
from sympy.polys.domains import QQ

from nilgroup.models import PermElement
from polymap.models import HEIS_KIND, GroupModel, PermMap, PolyMap, ZR_KIND, to_fraction
from polymap.services import PolyMapService
from utils.rationals import format_rational, parse_rational
from utils.serializers import StrictSerializer


class SparsePolynomialField(serializers.Field):
    """
    Многочлен в виде {"e1,e2,...": коэффициент}, ключ - вектор показателей,
    коэффициент - целое или строка "p/q"
    """

    default_error_messages = {"invalid": "Некорректная запись многочлена: {value}"}

    def to_internal_value(self, data):
        if not isinstance(data, dict):
            self.fail("invalid", value=data)
        terms = {}
        try:
            for key, coeff in data.items():
                monom = tuple(int(e) for e in str(key).split(",")) if str(key) else ()
                if any(e < 0 for e in monom):
                    self.fail("invalid", value=data)
                terms[monom] = parse_rational(coeff)
        except (ValueError, DjangoValidationError):
            self.fail("invalid", value=data)
        return terms

    def to_representation(self, value):
        return {
            ",".join(str(e) for e in monom): format_rational(to_fraction(coeff))
            for monom, coeff in sorted(value.terms())
        }


def build_polynomial(ring, terms):
    lengths = {len(monom) for monom in terms}
    if lengths and lengths != {ring.ngens}:
        raise serializers.ValidationError(f"Вектор показателей должен иметь длину {ring.ngens}")
    return ring.from_dict({monom: QQ(c.numerator, c.denominator) for monom, c in terms.items()})


class GroupModelSerializer(StrictSerializer):
    kind = serializers.ChoiceField(choices=[ZR_KIND, HEIS_KIND])
    rank = serializers.IntegerField(min_value=1, default=1)

    def validate(self, attrs):
        rank = 3 if attrs["kind"] == HEIS_KIND else attrs["rank"]
        try:
            attrs["instance"] = GroupModel(attrs["kind"], rank)
        except DjangoValidationError as exc:
            raise serializers.ValidationError(exc.messages)
        return attrs


class PolyMapSerializer(StrictSerializer):
    """
    Схема отображения Gamma -> UT(dim).

    Формат: {"model": {"kind": "zr", "rank": 1}, "dim": 3,
             "entries": {"1,3": {"2": 1}}} - позиции с единицы
    """

    model = GroupModelSerializer()
    dim = serializers.IntegerField(min_value=1)
    params = serializers.ListField(child=serializers.CharField(), default=list)
    entries = serializers.DictField(child=SparsePolynomialField(), default=dict)

    def validate(self, attrs):
        model = attrs["model"]["instance"]
        dim = attrs["dim"]
        ring = PolyMapService.ring_for(model, attrs["params"])
        rows = [[0] * dim for _ in range(dim)]
        for key, terms in attrs["entries"].items():
            try:
                i, j = (int(part) for part in key.split(","))
            except ValueError:
                raise serializers.ValidationError(f"Некорректная позиция {key!r}")
            if not 1 <= i < j <= dim:
                raise serializers.ValidationError(f"Позиция {key} вне наддиагональной части UT({dim})")
            rows[i - 1][j - 1] = build_polynomial(ring, terms)
        attrs["map"] = PolyMapService.from_matrix(model, rows, attrs["params"])
        return attrs

    def to_representation(self, instance: PolyMap):
        field = SparsePolynomialField()
        return {
            "model": {"kind": instance.model.kind, "rank": instance.model.rank},
            "dim": instance.dim,
            "params": list(instance.params),
            "entries": {
                f"{i + 1},{j + 1}": field.to_representation(instance.entries[i][j])
                for i in range(instance.dim)
                for j in range(i + 1, instance.dim)
                if instance.entries[i][j]
            },
        }


class PermMapSerializer(StrictSerializer):
    """
    Схема отображения Z^r -> Sym: {"model": ..., "base": [[образы], ...],
    "word": [[индекс базовой перестановки, многочлен-показатель], ...]}
    """

    model = GroupModelSerializer()
    base = serializers.ListField(child=serializers.ListField(child=serializers.IntegerField(min_value=0)), min_length=1)
    word = serializers.ListField(child=serializers.ListField(min_length=2, max_length=2))

    def validate(self, attrs):
        model = attrs["model"]["instance"]
        ring = PolyMapService.ring_for(model)
        field = SparsePolynomialField()
        try:
            base = tuple(PermElement(tuple(images)) for images in attrs["base"])
            word = tuple(
                (int(k), build_polynomial(ring, field.to_internal_value(exponent)))
                for k, exponent in attrs["word"]
            )
            attrs["map"] = PermMap(model, base, word)
        except (DjangoValidationError, TypeError, ValueError) as exc:
            messages = getattr(exc, "messages", [str(exc)])
            raise serializers.ValidationError(messages)
        return attrs
