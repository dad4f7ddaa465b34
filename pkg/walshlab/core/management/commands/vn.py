from core.management.base import GROWTH_HELP, JobCommand, provided


class Command(JobCommand):
    help = "Прогон количественной теоремы фон Неймана по случайным атомарным мерам"
    job = "vn"
    takes_input = False

    def add_job_arguments(self, parser):
        parser.add_argument("--epsilon", required=True, help="точность p/q из (0, 2]")
        parser.add_argument("--growth", required=True, help=GROWTH_HELP)
        parser.add_argument("--m0", type=int, help="M_bullet, по умолчанию 1")
        parser.add_argument("--cases", type=int, help="число случаев, по умолчанию 1000")
        parser.add_argument("--seed", type=int, default=0)
        parser.add_argument("--max-atoms", type=int, help="наибольшее число атомов меры")

    def job_params(self, options):
        return provided(options, {
            "epsilon": "epsilon", "growth": "growth", "m0": "m0", "cases": "cases", "max_atoms": "max_atoms",
        })
