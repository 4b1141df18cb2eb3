import logging
from django.contrib import admin
from django.http import HttpRequest
from django.utils.html import format_html
from typing import Optional

from .models import RunCheck, RunStatus, SimulationRun
from celery_app.tasks import run_scenario

logger = logging.getLogger(__name__)

STATUS_COLORS = {
    RunStatus.PENDING: '#6c757d',
    RunStatus.SUCCESS: '#28a745',
    RunStatus.CERTIFICATION_FAILED: '#fd7e14',
    RunStatus.CONFIG_ERROR: '#dc3545',
    RunStatus.NUMERICAL_ERROR: '#dc3545',
}


class RunCheckInline(admin.TabularInline):
    """Проверки запуска на странице запуска."""

    model = RunCheck
    extra = 0
    readonly_fields = ('name', 'passed', 'value', 'detail', 'created_at')
    can_delete = False


@admin.register(SimulationRun)
class SimulationRunAdmin(admin.ModelAdmin):
    """Административный интерфейс реестра запусков."""

    list_display = ('id', 'scenario', 'sample_count', 'final_energy', 'fit_value', 'created_at', 'status_badge')
    list_filter = ('status', 'created_at')
    search_fields = ('scenario', 'config_path', 'config_hash')
    readonly_fields = ('status', 'config_hash', 'trace_path', 'sample_count', 'final_energy', 'fit_model',
                       'fit_value', 'fit_r_squared', 'error_message', 'created_at', 'finished_at')
    inlines = [RunCheckInline]
    actions = ['rerun_scenario']

    def rerun_scenario(self, request: HttpRequest, queryset) -> None:
        """
        Действие для повторного запуска выбранных сценариев.

        Args:
            request: HTTP-запрос администратора
            queryset: Набор выбранных запусков
        """
        count = 0
        for run in queryset:
            try:
                run_scenario.delay(run.config_path, fit=run.fit_model, run_id=run.id)
                count += 1
            except Exception as e:
                logger.error(f"Ошибка постановки запуска ID={run.id} в очередь: {e}", exc_info=True)
                self.message_user(request, f"Не удалось поставить ID={run.id} в очередь: {e}", level="ERROR")

        self.message_user(request, f'Поставлено в очередь повторных запусков: {count}')

    rerun_scenario.short_description = "Повторно запустить выбранные сценарии"

    def status_badge(self, obj: SimulationRun) -> str:
        """
        Форматирует HTML-бейдж статуса запуска.

        Args:
            obj: Объект запуска

        Returns:
            HTML-код бейджа
        """
        return format_html(
            '<span style="background-color: {}; color: white; padding: 3px 8px; border-radius: 5px;">{}</span>',
            STATUS_COLORS.get(obj.status, '#6c757d'),
            obj.get_status_display(),
        )

    status_badge.short_description = 'Статус'

    def has_add_permission(self, request: HttpRequest) -> bool:
        return False


@admin.register(RunCheck)
class RunCheckAdmin(admin.ModelAdmin):
    """Просмотр проверок запусков."""

    list_display = ('run', 'name', 'passed', 'value', 'created_at')
    list_filter = ('passed', 'name', 'created_at')
    search_fields = ('run__scenario', 'name')
    readonly_fields = ('run', 'name', 'passed', 'value', 'detail', 'created_at')

    def has_add_permission(self, request: HttpRequest) -> bool:
        """Запрещает добавление проверок вручную."""
        return False

    def has_change_permission(self, request: HttpRequest, obj: Optional[RunCheck] = None) -> bool:
        """Запрещает изменение проверок."""
        return False
