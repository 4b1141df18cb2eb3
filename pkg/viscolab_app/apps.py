from django.apps import AppConfig


class ViscolabAppConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'viscolab_app'
