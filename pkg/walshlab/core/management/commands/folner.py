from core.management.base import JobCommand


class Command(JobCommand):
    help = "Таблица (N, sup-ratio) и phi_gamma(L) либо [I, I']_gamma для пары множеств"
    job = "folner"
