from django.apps import AppConfig


class NilgroupConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'nilgroup'
