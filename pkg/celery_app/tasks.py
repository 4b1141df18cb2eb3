import logging
from celery import shared_task
from typing import Any, Dict, Optional

from viscolab_app.models import SimulationRun
from viscolab_app.services.services import LaboratoryService

logger = logging.getLogger(__name__)


@shared_task(name='viscolab.run_scenario')
def run_scenario(config_path: str, fit: Optional[str] = None, run_id: Optional[int] = None) -> Dict[str, Any]:
    """
    Выполняет один сценарий и записывает результат в реестр запусков.

    Сценарии не делят изменяемого состояния, поэтому задачи можно выполнять
    параллельно на нескольких воркерах.

    Args:
        config_path: Путь к конфигурации сценария
        fit: Модель подгонки затухания ("power" или "exponential")
        run_id: ID существующего запуска (для повторного запуска)

    Returns:
        Dict с результатом:
        - status: статус запуска
        - run_id: ID записи в реестре
        - final_energy: E(T) (при успехе)
        - message: текст ошибки (при неудаче)
    """
    run = None
    if run_id is not None:
        try:
            run = SimulationRun.objects.get(id=run_id)
        except SimulationRun.DoesNotExist:
            logger.error(f"Запуск с ID {run_id} не найден")
            return {"status": "error", "message": f"Запуск с ID {run_id} не найден"}

    result = LaboratoryService.simulate(config_path, fit=fit, run=run)
    run_id = result.run.id if result.run is not None else None

    if result.ok:
        logger.info(f"Сценарий {config_path} выполнен, запуск ID={run_id}")
        return {"status": result.status, "run_id": run_id, "final_energy": result.outcome.final_energy}

    logger.error(f"Сценарий {config_path} не выполнен: {result.message}")
    return {"status": result.status, "run_id": run_id, "message": result.message}
