import json
import logging
from pathlib import Path

from django.core.management.base import CommandError

from core.management.base import JobCommand
from core.models import EXIT_SCHEMA
from core.serializers import JobConfigSerializer

logger = logging.getLogger(__name__)


class Command(JobCommand):
    help = "Выполнение задания из JSON-файла: {\"command\": \"vn\", \"params\": {...}, \"seed\": 0, ...}"
    takes_input = False

    def add_arguments(self, parser):
        parser.add_argument("config", help="JSON-файл задания")

    def handle(self, *args, **options):
        path = Path(options["config"])
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            logger.error(f"Не удалось прочитать задание {path}: {exc}")
            raise CommandError(f"Некорректный файл задания {path}", returncode=EXIT_SCHEMA)

        serializer = JobConfigSerializer(data=data, base_dir=path.parent)
        if not serializer.is_valid():
            logger.error(f"Некорректное задание {path}: {serializer.errors}")
            raise CommandError(f"Некорректное задание {path}", returncode=EXIT_SCHEMA)
        self.execute_job(serializer.validated_data["instance"])
