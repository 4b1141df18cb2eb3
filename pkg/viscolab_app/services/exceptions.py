from typing import Optional


class VidLabError(Exception):
    """Базовая ошибка лаборатории."""


class ValidationError(VidLabError):
    """Некорректные входные данные (нечисловые значения, неверные размеры)."""


class DomainError(VidLabError):
    """Нарушено математическое предусловие операции."""


class ConfigurationError(VidLabError):
    """Несогласованная конфигурация сценария."""


class CflViolationError(ConfigurationError):
    """Шаг по времени нарушает условие CFL."""

    def __init__(self, message: str, suggested_dt: float):
        super().__init__(message)
        self.suggested_dt = suggested_dt


class UnsupportedRegimeError(VidLabError):
    """Режим модели, который лаборатория сознательно не поддерживает."""


class CertificationError(VidLabError):
    """Ядро или тензор не прошли сертификацию."""


class InstabilityError(VidLabError):
    """Численная неустойчивость схемы."""

    def __init__(self, message: str, step: Optional[int] = None):
        super().__init__(message)
        self.step = step


class InsufficientHistoryError(VidLabError):
    """Истории деформаций недостаточно для вычисления свёртки."""


class StiffnessError(VidLabError):
    """Интегратор ОДУ не справился с шагом даже после дробления."""
