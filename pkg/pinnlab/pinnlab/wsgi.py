"""
WSGI config for pinnlab project.

Only used to serve the admin pages that list recorded training runs.
"""

import os

from django.core.wsgi import get_wsgi_application

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'pinnlab.settings')

application = get_wsgi_application()
