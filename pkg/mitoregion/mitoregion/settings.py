import os
from pathlib import Path


BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = os.environ.get(
    'MITOREGION_SECRET_KEY',
    'django-insecure-offline-cli-no-sessions-no-signing'
)

DEBUG = False

ALLOWED_HOSTS = []

INSTALLED_APPS = [
    'slides.apps.SlidesConfig',
    'evaluation.apps.EvaluationConfig',
]

DATABASES = {}

LANGUAGE_CODE = 'ru-RU'

TIME_ZONE = 'UTC'

USE_I18N = True

USE_TZ = True

SLIDES_THREADS = os.cpu_count() or 1

SLIDES_JSON_DIGITS = 9

SLIDES_MC_STRIDE_PX = 64

SLIDES_DEFAULT_RESOLUTION = 0.25

SLIDES_LOG_LEVEL = os.environ.get('SLIDES_LOG_LEVEL', 'INFO')

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'pipeline': {
            'format': '{asctime} {levelname} {name}: {message}',
            'style': '{',
        },
    },
    'handlers': {
        'stderr': {
            'class': 'logging.StreamHandler',
            'stream': 'ext://sys.stderr',
            'formatter': 'pipeline',
        },
    },
    'loggers': {
        'slides': {
            'handlers': ['stderr'],
            'level': SLIDES_LOG_LEVEL,
            'propagate': False,
        },
        'evaluation': {
            'handlers': ['stderr'],
            'level': SLIDES_LOG_LEVEL,
            'propagate': False,
        },
    },
}
