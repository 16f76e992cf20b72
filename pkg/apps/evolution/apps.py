from django.apps import AppConfig


class EvolutionConfigApp(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.evolution'
    label = 'evolution'
