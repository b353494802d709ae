import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'resonant_backend.settings')
django.setup()
