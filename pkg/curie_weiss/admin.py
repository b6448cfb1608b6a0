from django.contrib import admin
from .models import ExperimentRun

@admin.register(ExperimentRun)
class ExperimentRunAdmin(admin.ModelAdmin):
    list_display = ('kind', 'seed', 'passed', 'version', 'created_at')
    list_filter = ('kind', 'passed', 'version')
    search_fields = ('kind', 'seed', 'config_digest')
    readonly_fields = ('config_digest', 'created_at')
    list_per_page = 50
