"""
WSGI config for the hyperlab project.

Serves the run browser and the launch endpoint of the ``dynamics`` app
behind gunicorn (see start.sh).
"""

import os

from django.core.wsgi import get_wsgi_application

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'hyperlab.settings')

application = get_wsgi_application()
