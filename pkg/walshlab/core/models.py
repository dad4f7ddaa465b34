from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Tuple

COMMANDS = ("verify-poly", "complexity", "folner", "simulate", "scan", "vn", "rates")

SUCCESS = "Success"
FAILURE = "Failure"
INCONCLUSIVE = "Inconclusive"

STATUS_CHOICES = [
    (SUCCESS, "Успешно"),
    (FAILURE, "Проверка не пройдена"),
    (INCONCLUSIVE, "Результат не определен"),
]

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_SCHEMA = 2


@dataclass(frozen=True)
class JobConfig:
    """
    Задание командной строки: команда, входное JSON-описание (файл и/или
    параметры), seed для случайных корпусов и пути для отчета
    """

    command: str
    input: Path | None = None
    params: Dict[str, Any] = field(default_factory=dict)
    seed: int = 0
    output: Path | None = None
    summary: Path | None = None
    strict: bool = False


@dataclass(frozen=True)
class Report:
    """
    Результат команды. Таблица (header + rows) выводится в CSV,
    иначе payload выводится в JSON; summary - дополнительная сводка
    """

    status: str
    header: Tuple[str, ...] | None = None
    rows: Tuple[Tuple[str, ...], ...] = ()
    payload: Dict[str, Any] | None = None
    summary: Dict[str, Any] | None = None

    @property
    def is_table(self) -> bool:
        return self.header is not None

    def exit_code(self, strict: bool = False) -> int:
        if self.status == FAILURE or (strict and self.status == INCONCLUSIVE):
            return EXIT_FAILURE
        return EXIT_OK
