"""
Django settings for walshlab project.

Все вычислительные параметры читаются через python-decouple,
значения по умолчанию подходят для локального запуска тестов.
"""

from pathlib import Path
import os
import sys

from decouple import config

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent
sys.path.append(str(BASE_DIR))

FIXTURE_DIRS = [
    os.path.join(BASE_DIR, 'core', 'fixtures'),  # JSON-описания для командной строки
]

# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = config('SECRET_KEY', default='walshlab-local-only-key')

DEBUG = config('DEBUG', default=False, cast=bool)

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    'rest_framework',
    'utils.apps.UtilsConfig',
    'nilgroup.apps.NilgroupConfig',
    'polymap.apps.PolymapConfig',
    'systems.apps.SystemsConfig',
    'folner.apps.FolnerConfig',
    'dynamics.apps.DynamicsConfig',
    'vncircle.apps.VncircleConfig',
    'rates.apps.RatesConfig',
    'core.apps.CoreConfig',
]

LOG_LEVEL = config('LOG_LEVEL', default='INFO')

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "color": {
            "()": "colorlog.ColoredFormatter",
            "format": "%(log_color)s%(asctime)-8s %(levelname)s - %(name)s.py | func:%(funcName)s (%(lineno)s) - %(message)s",
            "log_colors": {
                "DEBUG": "white",
                "INFO": "green",
                "WARNING": "yellow",
                "ERROR": "red",
                "CRITICAL": "bold_red",
            },
        }
    },
    "handlers": {
        "console": {"class": "logging.StreamHandler", "formatter": "color"},
    },
    "root": {
        "handlers": ["console"],
        "level": LOG_LEVEL,
    },
}


# Хранилище не используется: все объекты предметной области неизменяемые и живут в памяти
DATABASES = {}

USE_TZ = True

TIME_ZONE = "UTC"

REST_FRAMEWORK = {
    'DEFAULT_PERMISSION_CLASSES': [
        'rest_framework.permissions.AllowAny',
    ],
    'UNAUTHENTICATED_USER': None,
}


# Вычислительные параметры

WALSHLAB_THREADS = config('WALSHLAB_THREADS', default=1, cast=int)

# Префикс имен свежих символьных параметров a, b при дифференцировании
WALSHLAB_PARAMETER_PREFIX = config('WALSHLAB_PARAMETER_PREFIX', default='t')

# 0 - использовать формулу (длина + 1) * (1 + степень)
POLYMAP_DEPTH_CAP = config('POLYMAP_DEPTH_CAP', default=0, cast=int)

FOLNER_SEARCH_CAP = config('FOLNER_SEARCH_CAP', default=4096, cast=int)
FOLNER_MONOTONE_WINDOW = config('FOLNER_MONOTONE_WINDOW', default=64, cast=int)
FOLNER_EXHAUSTIVE_CANDIDATES = config('FOLNER_EXHAUSTIVE_CANDIDATES', default=250000, cast=int)

PERIOD_LATTICE_CAP = config('PERIOD_LATTICE_CAP', default=100000, cast=int)
DYNAMICS_FLOAT_TOLERANCE = config('DYNAMICS_FLOAT_TOLERANCE', default=1e-9, cast=float)

VN_PRECISION_BITS = config('VN_PRECISION_BITS', default=256, cast=int)
VN_MARGIN = config('VN_MARGIN', default='1e-30')
VN_EXHAUSTIVE_WINDOW = config('VN_EXHAUSTIVE_WINDOW', default=64, cast=int)

RATES_MAX_BITS = config('RATES_MAX_BITS', default=1 << 20, cast=int)
# Предел числа элементов кортежей и длины лестницы C_i при точном переборе
RATES_ENTRY_LIMIT = config('RATES_ENTRY_LIMIT', default=100000, cast=int)

COMPLEXITY_BOUND_MAX_ARITY = config('COMPLEXITY_BOUND_MAX_ARITY', default=64, cast=int)
# Предел числа удвоений размеров в рекурсии c'(d, j, ...)
COMPLEXITY_BOUND_MAX_BITS = config('COMPLEXITY_BOUND_MAX_BITS', default=1 << 22, cast=int)
