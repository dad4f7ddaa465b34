from django.apps import AppConfig


class FolnerConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'folner'
