from core.management.base import JobCommand


class Command(JobCommand):
    help = "Проверка полиномиальности отображений относительно префильтрации (verify-poly)"
    job = "verify-poly"
