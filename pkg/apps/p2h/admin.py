from django.contrib import admin
from .models import ScenarioRun


@admin.register(ScenarioRun)
class ScenarioRunAdmin(admin.ModelAdmin):
    list_display = ('id', 'title', 'controller', 'preset', 'seed', 'status', 'started_at', 'finished_at')
    list_display_links = ('id', 'title')
    list_filter = ('status', 'controller', 'preset', 'started_at')
    search_fields = ('title', 'config_hash', 'celery_task_id')
    readonly_fields = ('config_hash', 'metrics', 'mode', 'output_dir', 'started_at', 'finished_at',
                       'celery_task_id', 'logs_file')

    fieldsets = (
        ('Execution Info', {
            'fields': ('title', 'controller', 'preset', 'seed', 'status', 'celery_task_id', 'logs_file')
        }),
        ('Input Data', {
            'fields': ('input_data', 'config_hash')
        }),
        ('Results', {
            'fields': ('progress', 'metrics', 'mode', 'output_dir')
        }),
        ('Timing', {
            'fields': ('started_at', 'finished_at')
        }),
        ('Run Details', {
            'fields': ('detail',),
            'classes': ('collapse',)
        }),
    )

    def has_add_permission(self, request):
        return False  # runs come from services.create_scenario_run
