from core.management.base import GROWTH_HELP, JobCommand, provided


class Command(JobCommand):
    help = "Кортеж M_1, ..., M_K и N_{c, eps, F}(M) в точном или отложенном режиме"
    job = "rates"
    takes_input = False

    def add_job_arguments(self, parser):
        parser.add_argument("--epsilon", required=True, help="точность p/q")
        parser.add_argument("--complexity", type=int, required=True, help="сложность c")
        parser.add_argument("--growth", required=True, help=GROWTH_HELP)
        parser.add_argument("--m", type=int, help="начальное M, по умолчанию 1")
        parser.add_argument("--mode", choices=["exact", "deferred"])
        parser.add_argument("--proposition", action="store_true", default=None,
                            help="кортеж промежуточного утверждения вместо основного")
        parser.add_argument("--delta-override", help="тестовое delta (несогласованный профиль)")
        parser.add_argument("--ladder-override", type=int, help="тестовая длина лестницы")

    def job_params(self, options):
        return provided(options, {
            "epsilon": "epsilon", "complexity": "complexity", "growth": "growth", "m": "m", "mode": "mode",
            "proposition": "proposition", "delta_override": "delta_override", "ladder_override": "ladder_override",
        })
