import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Tuple, Union

from django.utils import timezone

from viscolab_app.models import RunCheck, RunStatus, SimulationRun
from viscolab_app.services.exceptions import (
    CertificationError,
    ConfigurationError,
    DomainError,
    UnsupportedRegimeError,
    ValidationError,
    VidLabError,
)
from viscolab_app.services.kernels import AssumptionReport, validate_kernel
from viscolab_app.services.scenarios import (
    ScenarioConfig,
    ScenarioOutcome,
    build_material,
    build_mesh,
    load_config,
    run_scenario,
)

logger = logging.getLogger(__name__)

EXIT_CODES = {
    RunStatus.SUCCESS: 0,
    RunStatus.CERTIFICATION_FAILED: 1,
    RunStatus.CONFIG_ERROR: 2,
    RunStatus.NUMERICAL_ERROR: 3,
}


def status_for(error: Exception) -> str:
    """Статус запуска для исключения лаборатории."""
    if isinstance(error, CertificationError):
        return RunStatus.CERTIFICATION_FAILED
    if isinstance(error, (ConfigurationError, ValidationError, DomainError, UnsupportedRegimeError)):
        return RunStatus.CONFIG_ERROR
    return RunStatus.NUMERICAL_ERROR


@dataclass
class LabResult:
    status: str
    message: Optional[str] = None
    outcome: Optional[ScenarioOutcome] = None
    run: Optional[SimulationRun] = None

    @property
    def ok(self) -> bool:
        return self.status == RunStatus.SUCCESS

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.status]


class LaboratoryService:
    """Сервис запуска сценариев и проверок с записью результатов в реестр."""

    @staticmethod
    def simulate(config_path: Union[str, Path], fit: Optional[str] = None, record: bool = True,
                 output_dir: Optional[Union[str, Path]] = None, run: Optional[SimulationRun] = None) -> LabResult:
        """
        Выполняет сценарий и записывает запуск и проверки в реестр.

        Args:
            config_path: Путь к конфигурации сценария
            fit: Модель подгонки затухания E ("power" или "exponential")
            record: Сохранять ли запуск в базе данных
            output_dir: Каталог для относительных путей вывода
            run: Существующая запись запуска (для повторного запуска из админки)

        Returns:
            LabResult со статусом, сообщением и результатом расчёта
        """
        config_path = str(config_path)
        if record and run is None:
            run = SimulationRun.objects.create(scenario=Path(config_path).stem, config_path=config_path)
        elif run is not None:
            run.checks.all().delete()
            run.status = RunStatus.PENDING
            run.error_message = None

        try:
            config = load_config(config_path)
            if run is not None:
                run.scenario = config.name
                run.config_hash = config.config_hash
            outcome = run_scenario(config, fit=fit, output_dir=output_dir)
        except VidLabError as e:
            status = status_for(e)
            message = str(e) if config_path in str(e) else f"{config_path}: {e}"
            logger.error(f"Сценарий {config_path} завершился с ошибкой ({status}): {e}")
            LaboratoryService._finish(run, status, error_message=message)
            return LabResult(status, message, run=run)
        except Exception as e:
            logger.error(f"Непредвиденная ошибка сценария {config_path}: {e}", exc_info=True)
            LaboratoryService._finish(run, RunStatus.NUMERICAL_ERROR, error_message=str(e))
            return LabResult(RunStatus.NUMERICAL_ERROR, str(e), run=run)

        if run is not None:
            LaboratoryService._record_outcome(run, outcome)
        LaboratoryService._finish(run, RunStatus.SUCCESS)
        return LabResult(RunStatus.SUCCESS, LaboratoryService.summary(outcome), outcome=outcome, run=run)

    @staticmethod
    def summary(outcome: ScenarioOutcome) -> str:
        parts = [f"scenario={outcome.config.name}", f"samples={len(outcome.trace)}",
                 f"final_E={outcome.final_energy!r}", f"dissipative={outcome.dissipation.passed}"]
        if outcome.fit is not None:
            label = "exponent" if outcome.fit.model == "power" else "rate"
            parts.append(f"{label}={outcome.fit.value!r} r2={outcome.fit.r_squared!r}")
        if outcome.exp_comparison is not None and outcome.exp_comparison.b3 is not None:
            parts.append(f"b3={outcome.exp_comparison.b3!r}")
        if outcome.trace_path is not None:
            parts.append(f"trace={outcome.trace_path}")
        return " ".join(parts)

    @staticmethod
    def _record_outcome(run: SimulationRun, outcome: ScenarioOutcome) -> None:
        assumptions = outcome.assumptions
        checks = [
            RunCheck(run=run, name="kernel_certification", passed=assumptions.satisfied,
                     detail=json.dumps(assumptions.as_dict(), ensure_ascii=False)),
            RunCheck(run=run, name="energy_dissipation", passed=outcome.dissipation.passed,
                     value=outcome.dissipation.worst_excess,
                     detail=f"worst_t={outcome.dissipation.worst_t}"),
            RunCheck(run=run, name="boundedness_ratio", passed=math.isfinite(outcome.boundedness),
                     value=outcome.boundedness),
        ]
        if outcome.fit is not None:
            checks.append(RunCheck(run=run, name="decay_fit", passed=outcome.fit.r_squared >= 0.99,
                                   value=outcome.fit.value,
                                   detail=f"model={outcome.fit.model} r2={outcome.fit.r_squared} "
                                          f"window={outcome.fit.window}"))
            run.fit_model = outcome.fit.model
            run.fit_value = outcome.fit.value
            run.fit_r_squared = outcome.fit.r_squared
        comparison = outcome.exp_comparison
        if comparison is not None:
            checks.append(RunCheck(run=run, name="exponential_comparison", passed=comparison.passed,
                                   value=comparison.b3, detail=comparison.message or f"b2={comparison.b2}"))
        RunCheck.objects.bulk_create(checks)

        run.trace_path = str(outcome.trace_path) if outcome.trace_path else None
        run.sample_count = len(outcome.trace)
        run.final_energy = outcome.final_energy

    @staticmethod
    def _finish(run: Optional[SimulationRun], status: str, error_message: Optional[str] = None) -> None:
        if run is None:
            return
        run.status = status
        run.error_message = error_message
        run.finished_at = timezone.now()
        run.save()

    @staticmethod
    def certify(config_path: Union[str, Path]) -> Tuple[ScenarioConfig, AssumptionReport]:
        """
        Проверяет ядро сценария без расчёта.

        Returns:
            (конфигурация, отчёт о допущениях)
        """
        config = load_config(config_path)
        mesh = build_mesh(config)
        built = build_material(config, mesh)
        return config, validate_kernel(built.modulus, built.material.kernel, built.material.kernel_scale)

    @staticmethod
    def enqueue(config_paths: List[Union[str, Path]]) -> List[str]:
        """
        Ставит сценарии в очередь Celery.

        Returns:
            Идентификаторы задач
        """
        from celery_app.tasks import run_scenario as run_scenario_task

        task_ids = []
        for path in config_paths:
            result = run_scenario_task.delay(str(path))
            logger.info(f"Сценарий {path} поставлен в очередь, задача {result.id}")
            task_ids.append(result.id)
        return task_ids
