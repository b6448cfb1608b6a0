from django.apps import AppConfig


class CurieWeissConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'curie_weiss'
    verbose_name = 'Curie-Weiss estimation'
