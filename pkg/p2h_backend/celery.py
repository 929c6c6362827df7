import os
from celery import Celery
from django.conf import settings

# Set default Django settings
os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'p2h_backend.settings')

app = Celery('p2h_backend')

# Load configuration from Django settings with CELERY_ prefix
app.config_from_object('django.conf:settings', namespace='CELERY')

# Scenario jobs live in the p2h app's tasks module.
app.autodiscover_tasks(lambda: settings.INSTALLED_APPS)
