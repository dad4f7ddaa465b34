from django.apps import AppConfig


class PolymapConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'polymap'
