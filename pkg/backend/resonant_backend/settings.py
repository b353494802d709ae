"""
Django settings for resonant_backend project.
"""

from pathlib import Path
import os

import psutil

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

# Load environment variables from .env file
try:
    from dotenv import load_dotenv
    load_dotenv(BASE_DIR / '.env')
except ImportError:
    # If python-dotenv is not installed, manually load .env file
    env_path = BASE_DIR / '.env'
    if env_path.exists():
        with open(env_path) as f:
            for line in f:
                if line.strip() and not line.startswith('#'):
                    key, value = line.strip().split('=', 1)
                    os.environ.setdefault(key, value)

# Only used by django internals, nothing here is served
SECRET_KEY = os.environ.get('SECRET_KEY', 'django-insecure-resonant-verification-local-key')

DEBUG = os.environ.get('DEBUG', 'False') == 'True'

ALLOWED_HOSTS = []

# Application definition
INSTALLED_APPS = [
    'django.contrib.contenttypes',
    'django.contrib.auth',
    'rest_framework',
    'core',
]

# No models are defined; the database is never touched by the verification suites
DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': BASE_DIR / 'db.sqlite3',
    }
}

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

LANGUAGE_CODE = 'en-us'
TIME_ZONE = 'UTC'
USE_TZ = True

# Verification settings
VERIFY_CONFIG_DIR = Path(os.environ.get('VERIFY_CONFIG_DIR', BASE_DIR / 'configs'))
VERIFY_DEFAULT_CONFIG = os.environ.get('VERIFY_DEFAULT_CONFIG', 'default.json')
VERIFY_REPORT_DIR = Path(os.environ.get('VERIFY_REPORT_DIR', BASE_DIR / 'reports'))
VERIFY_SEED = int(os.environ.get('VERIFY_SEED', '20240917'))
VERIFY_THREADS = int(os.environ.get('VERIFY_THREADS', psutil.cpu_count(logical=True) or 1))
VERIFY_SHARDS = int(os.environ.get('VERIFY_SHARDS', '8'))

LOG_LEVEL = os.environ.get('LOG_LEVEL', 'DEBUG' if DEBUG else 'INFO')

# Logging configuration
LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{levelname} {asctime} {module} {process:d} {thread:d} {message}',
            'style': '{',
        },
        'simple': {
            'format': '{levelname} {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'verbose' if DEBUG else 'simple',
        },
    },
    'root': {
        'handlers': ['console'],
        'level': 'WARNING',
    },
    'loggers': {
        'django': {
            'handlers': ['console'],
            'level': 'WARNING',
            'propagate': False,
        },
        'core': {
            'handlers': ['console'],
            'level': LOG_LEVEL,
            'propagate': False,
        },
    },
}
