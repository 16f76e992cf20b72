from django.apps import AppConfig


class ThermofieldConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.thermofield'
