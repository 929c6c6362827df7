from django.apps import AppConfig


class P2hConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'p2h'
    verbose_name = 'Power-to-hydrogen control'
