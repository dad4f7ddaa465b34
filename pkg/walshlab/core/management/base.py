from pathlib import Path
from typing import Any, Dict

from django.core.management.base import BaseCommand, CommandError

from core.models import EXIT_OK, JobConfig
from core.services import JobService

GROWTH_HELP = (
    "функция роста: целые числа, M, + * ^, max(...), композиция через '@' "
    "(\"2*M @ M^2\" означает M -> 2 M^2)"
)


class JobCommand(BaseCommand):
    """
    Общая часть команд: входной файл, пути отчета и флаг --strict.
    Код возврата: 0 - успех, 1 - ошибка вычислений либо Inconclusive при --strict,
    2 - некорректные входные данные
    """

    job: str = ""
    takes_input = True

    def add_arguments(self, parser):
        if self.takes_input:
            parser.add_argument("input", help="JSON-описание входных данных")
        parser.add_argument("--output", help="файл отчета (по умолчанию stdout)")
        parser.add_argument("--summary", help="файл JSON-сводки для табличных отчетов")
        parser.add_argument("--strict", action="store_true", help="Inconclusive считается ошибкой")
        self.add_job_arguments(parser)

    def add_job_arguments(self, parser):
        pass

    def job_params(self, options) -> Dict[str, Any]:
        return {}

    def handle(self, *args, **options):
        config = JobConfig(
            command=self.job,
            input=Path(options["input"]) if self.takes_input else None,
            params=self.job_params(options),
            seed=options.get("seed") or 0,
            output=Path(options["output"]) if options["output"] else None,
            summary=Path(options["summary"]) if options["summary"] else None,
            strict=options["strict"],
        )
        self.execute_job(config)

    def execute_job(self, config: JobConfig) -> None:
        code, text = JobService.run(config)
        if text is not None and config.output is None:
            self.stdout.write(text, ending="")
        if code != EXIT_OK:
            raise CommandError(f"Задание {config.command} завершилось с кодом {code}", returncode=code)


def provided(options, names: Dict[str, str]) -> Dict[str, Any]:
    """
    Параметры, заданные флагами; незаданные остаются на значениях схемы
    """
    return {key: options[name] for name, key in names.items() if options.get(name) is not None}
