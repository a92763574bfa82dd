from django.contrib import admin

from .models import ExperimentRun


@admin.register(ExperimentRun)
class ExperimentRunAdmin(admin.ModelAdmin):
    list_display = ('id', 'command', 'seed', 'status', 'exit_code', 'duration_seconds', 'created_at')
    list_filter = ('command', 'status', 'created_at')
    search_fields = ('config_text',)
    readonly_fields = ('report', 'table_csv', 'created_at')
