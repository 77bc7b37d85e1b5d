"""
Django settings for the tvvarcast project.

The project has no web surface: Django provides the settings layer, the
management commands that make up the command-line tool, form-based
validation of run configurations and the test runner.

Environment variables (read with python-decouple):
- TVVAR_OUTPUT_DIR: default directory for emitted CSV/JSON artifacts
- TVVAR_LOG_LEVEL: root logging level
"""

from pathlib import Path

from decouple import config

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


# Nothing is signed or served; the key only satisfies Django's startup checks.
SECRET_KEY = 'tvvarcast-local-no-web-surface'

DEBUG = False

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    'dynamics.apps.DynamicsConfig',
    'portfolio.apps.PortfolioConfig',
    'pipeline.apps.PipelineConfig',
]


# No persistence: every artifact is a CSV or JSON file on disk.
DATABASES = {}


# Internationalization

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True


# ===== RUN ARTIFACTS =====
TVVAR_OUTPUT_DIR = Path(config('TVVAR_OUTPUT_DIR', default='out'))


# ===== LOGGING =====
TVVAR_LOG_LEVEL = config('TVVAR_LOG_LEVEL', default='INFO').upper()

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'timestamped': {
            'format': '%(asctime)s %(levelname)-7s %(name)s: %(message)s',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'timestamped',
        },
    },
    'root': {
        'handlers': ['console'],
        'level': TVVAR_LOG_LEVEL,
    },
    'loggers': {
        'dynamics': {'level': TVVAR_LOG_LEVEL},
        'portfolio': {'level': TVVAR_LOG_LEVEL},
        'pipeline': {'level': TVVAR_LOG_LEVEL},
    },
}
