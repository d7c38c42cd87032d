from django.contrib import admin
from unfold.admin import ModelAdmin
from . import models


class TrainingRunAdmin(ModelAdmin):
    list_display = ('problem', 'profile', 'seed', 'status', 'final_loss', 'max_abs_error', 'create_date')
    list_filter = ('status', 'problem', 'profile', 'create_date')
    search_fields = ('uuid', 'problem', 'output_dir')
    ordering = ('-create_date',)

    fieldsets = (
        ('Run', {
            'fields': ('problem', 'profile', 'seed', 'status', 'output_dir')
        }),
        ('Network', {
            'fields': ('layer_sizes', 'activation', 'parameter_count', 'iterations')
        }),
        ('Results', {
            'fields': ('final_loss', 'wall_seconds', 'max_abs_error')
        }),
        ('Configuration', {
            'fields': ('config',),
            'classes': ('collapse',),
        }),
        ('Error Handling', {
            'fields': ('error_message',),
            'classes': ('collapse',),
        }),
        ('System Info', {
            'fields': ('uuid', 'create_date', 'modified_date'),
            'classes': ('collapse',),
        }),
    )

    readonly_fields = (
        'uuid', 'create_date', 'modified_date', 'problem', 'profile', 'seed', 'layer_sizes',
        'activation', 'parameter_count', 'iterations', 'final_loss', 'wall_seconds',
        'max_abs_error', 'output_dir', 'config',
    )

    show_facets = admin.ShowFacets.ALWAYS


admin.site.register(models.TrainingRun, TrainingRunAdmin)
