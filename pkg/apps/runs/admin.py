from django.contrib import admin
from .models import RunCheckpoint, SimulationRun


class RunCheckpointInline(admin.TabularInline):
    model = RunCheckpoint
    extra = 0
    readonly_fields = ['path', 'segment', 'beta', 't', 'step_index', 'created_at']


@admin.register(SimulationRun)
class SimulationRunAdmin(admin.ModelAdmin):
    list_display = ['id', 'kind', 'status', 'seed', 'beta', 't', 'created_at']
    list_filter = ['kind', 'status']
    inlines = [RunCheckpointInline]


@admin.register(RunCheckpoint)
class RunCheckpointAdmin(admin.ModelAdmin):
    list_display = ['run', 'segment', 'beta', 't', 'step_index', 'created_at']
