from core.management.base import JobCommand


class Command(JobCommand):
    help = "Сканирование метастабильности: CSV (M, F_M, N, N2, shift, l2_squared, l2, passed)"
    job = "scan"
