try:
    from .celery import app as celery_app
    __all__ = ('celery_app',)
except ImportError:
    # inline runs work without celery
    celery_app = None
    __all__ = ()
