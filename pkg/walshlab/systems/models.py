from dataclasses import dataclass, field
from typing import Any, Dict, Tuple

from django.core.exceptions import ValidationError

from polymap.models import GroupModel, PolyMap


@dataclass(frozen=True)
class System:
    """
    Система отображений (g_0, ..., g_j), g_0 тождественно равно единице
    """

    maps: Tuple[PolyMap, ...]

    def __post_init__(self):
        if not self.maps:
            raise ValidationError("Система должна содержать хотя бы g_0")
        first = self.maps[0]
        if any(g.model != first.model or g.dim != first.dim for g in self.maps):
            raise ValidationError("Все отображения системы должны иметь общую область и UT")

    @property
    def j(self) -> int:
        return len(self.maps) - 1

    @property
    def model(self) -> GroupModel:
        return self.maps[0].model

    @property
    def dim(self) -> int:
        return self.maps[0].dim

    @property
    def is_trivial(self) -> bool:
        return self.j == 0

    def describe(self) -> Tuple[str, ...]:
        return tuple(str(g) for g in self.maps)

    def __str__(self):
        return "(" + ", ".join(self.describe()) + ")"


@dataclass(frozen=True)
class ReductionStep:
    """
    Шаг сертификата: редукция с символьными (a, b) и система после нормализации
    """

    a: str | None
    b: str | None
    system: Tuple[str, ...]


@dataclass(frozen=True)
class ComplexityCertificate:
    bound: int
    steps: Tuple[ReductionStep, ...]
    right: bool = False
    status: str = field(default="Certified", init=False)

    def to_tree(self) -> Dict[str, Any]:
        """
        Сертификат в виде вложенного дерева для аудита
        """
        tree: Dict[str, Any] | None = None
        for step in reversed(self.steps):
            node: Dict[str, Any] = {"system": list(step.system)}
            if step.b is not None:
                node["reduction"] = {"a": step.a, "b": step.b}
            if tree is not None:
                node["child"] = tree
            tree = node
        return {"bound": self.bound, "right": self.right, "tree": tree}
