from django.apps import AppConfig


class AnsatzConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.ansatz'

    def ready(self):
        # architecture modules register themselves on import
        from . import arnno, mean_field, rbmo  # noqa: F401
