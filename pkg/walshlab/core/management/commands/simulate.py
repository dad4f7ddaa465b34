from core.management.base import JobCommand


class Command(JobCommand):
    help = "Точные кратные эргодические средние по множествам Фёльнера и их предел"
    job = "simulate"
