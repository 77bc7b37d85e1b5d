"""Pytest wiring: configure Django before the SimpleTestCase suites run."""
import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'tvvarcast.settings')
django.setup()
