from django.apps import AppConfig


class VncircleConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'vncircle'
