from pathlib import Path

from rest_framework import serializers

from core.models import COMMANDS, JobConfig
from nilgroup.models import UT_KIND
from nilgroup.serializers import PrefiltrationSerializer
from polymap.serializers import PermMapSerializer, PolyMapSerializer
from utils.serializers import StrictSerializer

# команды, которым параметры передаются флагами, а не файлом
FLAG_COMMANDS = ("vn", "rates")


class JobConfigSerializer(StrictSerializer):
    """
    Схема файла задания для команды run.

    Формат: {"command": "scan", "input": "scan.json", "seed": 0,
             "output": "scan.csv", "strict": true}
    Относительные пути считаются от каталога base_dir (каталог файла задания).
    """

    command = serializers.ChoiceField(choices=COMMANDS)
    input = serializers.CharField(required=False)
    params = serializers.DictField(default=dict)
    seed = serializers.IntegerField(min_value=0, max_value=2 ** 64 - 1, default=0)
    output = serializers.CharField(required=False)
    summary = serializers.CharField(required=False)
    strict = serializers.BooleanField(default=False)

    def __init__(self, *args, base_dir: Path | None = None, **kwargs):
        super().__init__(*args, **kwargs)
        self.base_dir = base_dir or Path.cwd()

    def _path(self, value: str | None) -> Path | None:
        if value is None:
            return None
        path = Path(value)
        return path if path.is_absolute() else self.base_dir / path

    def validate(self, attrs):
        if attrs["command"] not in FLAG_COMMANDS and "input" not in attrs and not attrs["params"]:
            raise serializers.ValidationError(f"Для команды {attrs['command']} нужен input или params")
        attrs["instance"] = JobConfig(
            command=attrs["command"],
            input=self._path(attrs.get("input")),
            params=dict(attrs["params"]),
            seed=attrs["seed"],
            output=self._path(attrs.get("output")),
            summary=self._path(attrs.get("summary")),
            strict=attrs["strict"],
        )
        return attrs


class VerifyPolySerializer(StrictSerializer):
    """
    Проверка полиномиальности набора отображений относительно одной префильтрации.
    closure=true дополнительно проверяет попарные произведения и обратные
    """

    maps = PolyMapSerializer(many=True, default=list)
    perm_maps = PermMapSerializer(many=True, default=list)
    prefiltration = PrefiltrationSerializer()
    depth_cap = serializers.IntegerField(min_value=1, required=False)
    closure = serializers.BooleanField(default=False)

    def validate(self, attrs):
        if not attrs["maps"] and not attrs["perm_maps"]:
            raise serializers.ValidationError("Нужно хотя бы одно отображение")
        gb = attrs["prefiltration"]["prefiltration"]
        if attrs["maps"] and (gb.kind != UT_KIND or any(item["map"].dim != gb.dim for item in attrs["maps"])):
            raise serializers.ValidationError(f"Отображения должны принимать значения в UT({gb.dim})")
        return attrs
