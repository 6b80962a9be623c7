"""
WSGI entry point for the master's HTTP API (alert queries, sensors, rule
pushes). The sensor TCP listener is not part of it; run
``manage.py master`` alongside.
"""

import os

from django.core.wsgi import get_wsgi_application

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'main.settings')

application = get_wsgi_application()
