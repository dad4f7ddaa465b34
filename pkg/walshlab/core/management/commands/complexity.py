from core.management.base import JobCommand


class Command(JobCommand):
    help = "Сертификат сложности системы и оценка c(d, j)"
    job = "complexity"
