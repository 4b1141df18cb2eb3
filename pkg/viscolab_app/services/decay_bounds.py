import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from viscolab_app.services.exceptions import DomainError, StiffnessError, ValidationError

logger = logging.getLogger(__name__)

LEMMA_SLACK = 1e-6
EXP_SLACK = 0.05
MAX_HALVINGS = 3
MODELS = ("power", "exponential")


@dataclass(frozen=True)
class PolyBoundParams:
    """Параметры оценки сравнения: y(0), M2, M3 и показатель q."""

    y0: float
    m2: float
    m3: float
    q: float

    def __post_init__(self):
        for name in ("y0", "m2", "m3"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ValidationError(f"Параметр {name} должен быть неотрицательным, получено {value}")
        if not (math.isfinite(self.q) and self.q >= 1):
            raise DomainError(f"Показатель q должен быть не меньше 1, получено {self.q}")
        if self.q <= 2:
            logger.warning(f"Показатель q={self.q} <= 2: оценка вычисляется, хотя она выведена для q > 2")


def poly_bound(params: PolyBoundParams, t):
    """
    y(t) <= q^q [(y0 + 2 M2^q M3)^(-1/q) + (2 M2)^(-1) M3^(-1/q) t]^(-q).

    Args:
        params: Параметры оценки
        t: Момент времени или массив моментов

    Returns:
        Значение оценки той же формы, что и t
    """
    if params.m2 <= 0 or params.m3 <= 0:
        raise DomainError("Оценка определена только при M2 > 0 и M3 > 0")
    times = np.asarray(t, dtype=float)
    if np.any(times < 0):
        raise DomainError("Оценка определена только при t >= 0")
    q = params.q
    start = (params.y0 + 2.0 * params.m2 ** q * params.m3) ** (-1.0 / q)
    slope = 1.0 / (2.0 * params.m2 * params.m3 ** (1.0 / q))
    bound = q ** q * (start + slope * times) ** (-q)
    return float(bound) if np.ndim(bound) == 0 else bound


def comparison_preconditions(params: PolyBoundParams) -> bool:
    """Достаточные условия, при которых замкнутая оценка мажорирует решение уравнения сравнения."""
    if params.m2 <= 0 or params.m3 <= 0:
        return False
    q = params.q
    first = 2.0 ** (1.0 - 1.0 / q) * params.m2 ** 2 * params.m3 ** (1.0 / q) >= 1.0
    second = params.m2 ** q * (2.0 * q - 2.0 ** (2.0 / q)) >= 1.0
    return first and second


def _comparison_rhs(params: PolyBoundParams, t: float, y: float) -> float:
    y = max(y, 0.0)
    return -params.m2 * y ** (1.0 + 1.0 / params.q) + params.m3 * (1.0 + t) ** (-params.q - 1.0)


def max_oracle_step(params: PolyBoundParams) -> float:
    return 1e-3 * max(1.0, 1.0 / params.m2) if params.m2 > 0 else 1e-3


def ode_oracle(params: PolyBoundParams, t_end: float, dt: Optional[float] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    РК4 для уравнения ẏ = -M2 y^(1+1/q) + M3 (1+t)^(-q-1).

    Отрицательные значения обрезаются до 0; нечисловой шаг дробится
    пополам не более трёх раз.

    Returns:
        (моменты времени, значения y)
    """
    limit = max_oracle_step(params)
    dt = limit if dt is None else dt
    if dt <= 0 or dt > limit * (1.0 + 1e-12):
        raise DomainError(f"Шаг {dt} вне допустимого диапазона (0, {limit}]")
    if t_end < 0:
        raise DomainError("Горизонт интегрирования должен быть неотрицательным")

    steps = int(math.ceil(t_end / dt - 1e-9)) if t_end > 0 else 0
    dt = t_end / steps if steps else dt
    times = np.linspace(0.0, t_end, steps + 1)
    values = np.zeros(steps + 1)
    values[0] = params.y0

    for n in range(steps):
        t, y = times[n], values[n]
        substeps = 1
        for _ in range(MAX_HALVINGS + 1):
            h = dt / substeps
            current, moment = y, t
            for _ in range(substeps):
                k1 = _comparison_rhs(params, moment, current)
                k2 = _comparison_rhs(params, moment + 0.5 * h, current + 0.5 * h * k1)
                k3 = _comparison_rhs(params, moment + 0.5 * h, current + 0.5 * h * k2)
                k4 = _comparison_rhs(params, moment + h, current + h * k3)
                current = max(current + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4), 0.0)
                moment += h
            if math.isfinite(current):
                break
            substeps *= 2
        else:
            raise StiffnessError(f"Шаг РК4 отклонён после {MAX_HALVINGS} делений пополам при t={t}")
        values[n + 1] = current
    return times, values


@dataclass(frozen=True)
class LemmaCheck:
    passed: bool
    margin: float
    worst_t: float
    preconditions_met: bool


def verify_comparison_bound(params: PolyBoundParams, t_end: float = 10.0, dt: Optional[float] = None) -> LemmaCheck:
    """
    Сравнивает решение уравнения сравнения с замкнутой оценкой поточечно.

    margin = min (bound - y) / bound; проверка пройдена при margin >= -1e-6.
    """
    preconditions = comparison_preconditions(params)
    if not preconditions:
        logger.warning(f"Достаточные условия оценки не выполнены для {params}")
    times, values = ode_oracle(params, t_end, dt)
    bound = poly_bound(params, times)
    margins = (bound - values) / bound
    index = int(np.argmin(margins))
    margin = float(margins[index])
    return LemmaCheck(passed=margin >= -LEMMA_SLACK, margin=margin, worst_t=float(times[index]),
                      preconditions_met=preconditions)


def exp_bound(l0: float, a3: float, b3: float, t):
    """Экспоненциальная огибающая L(0)·a3·exp(-b3 t)."""
    if b3 <= 0:
        raise DomainError(f"Скорость огибающей должна быть положительной, получено {b3}")
    value = l0 * a3 * np.exp(-b3 * np.asarray(t, dtype=float))
    return float(value) if np.ndim(value) == 0 else value


def comparison_solution(z0: float, kappa4_tilde: float, b2: float, t):
    """Решение ż = exp(-κ̃4 t) - b2 z, z(0) = z0, по формуле вариации постоянных."""
    times = np.asarray(t, dtype=float)
    if abs(b2 - kappa4_tilde) <= 1e-12 * max(1.0, abs(b2)):
        return (z0 + times) * np.exp(-b2 * times)
    return z0 * np.exp(-b2 * times) + (np.exp(-kappa4_tilde * times) - np.exp(-b2 * times)) / (b2 - kappa4_tilde)


@dataclass(frozen=True)
class ExpComparison:
    passed: bool
    b2: Optional[float]
    b3: Optional[float]
    fitted_rate: Optional[float]
    margin: float
    message: str = ""


def verify_exp(times, values, kappa4_tilde: float, b2: float, slack: float = EXP_SLACK) -> Tuple[bool, float]:
    """Проверка L(t)/L(0) <= (1 + slack)·z(t) для заданного b2; возвращает (успех, запас)."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if not np.any(values):
        return True, 0.0
    if values[0] <= 0:
        return False, -math.inf
    normalized = values / values[0]
    z = comparison_solution(1.0, kappa4_tilde, b2, times)
    margins = (1.0 + slack) * z - normalized
    margin = float(np.min(margins))
    return margin >= 0.0, margin


def fit_exp_comparison(times, values, kappa4_tilde: float, window: Optional[Tuple[float, float]] = None,
                       slack: float = EXP_SLACK, iterations: int = 60) -> ExpComparison:
    """
    Подбирает наибольшее b2 <= подогнанной скорости затухания L, при котором
    нормированная трасса лежит под решением уравнения сравнения.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if values.size == 0 or not np.any(values):
        return ExpComparison(True, None, None, None, 0.0, "нулевая трасса")

    try:
        fit = fit_decay(times, values, "exponential", window)
    except ValidationError as e:
        return ExpComparison(False, None, None, None, -math.inf, str(e))
    if fit.value <= 0:
        return ExpComparison(False, None, None, fit.value, -math.inf,
                             f"Подогнанная скорость затухания неположительна: {fit.value}")

    passed, margin = verify_exp(times, values, kappa4_tilde, fit.value, slack)
    if passed:
        b2 = fit.value
    else:
        lower, upper = 0.0, fit.value
        for _ in range(iterations):
            middle = 0.5 * (lower + upper)
            if verify_exp(times, values, kappa4_tilde, middle, slack)[0]:
                lower = middle
            else:
                upper = middle
        if lower <= 0:
            return ExpComparison(False, None, None, fit.value, margin,
                                 "Трасса не мажорируется решением уравнения сравнения ни при каком b2 > 0")
        b2 = lower
        passed, margin = verify_exp(times, values, kappa4_tilde, b2, slack)
    return ExpComparison(passed, b2, min(b2, kappa4_tilde), fit.value, margin)


def pm_for(p: float) -> Tuple[int, int]:
    """Наибольшее m с p_m = 2^m - 1 < p - 1."""
    if not (math.isfinite(p) and p > 2):
        raise DomainError(f"Показатель p должен быть больше 2, получено {p}")
    m = 1
    while 2 ** (m + 1) - 1 < p - 1:
        m += 1
    return m, 2 ** m - 1


@dataclass(frozen=True)
class DecayFit:
    model: str
    value: float
    intercept: float
    r_squared: float
    window: Tuple[float, float]
    points: int
    trimmed: int = 0

    @property
    def exponent(self) -> Optional[float]:
        return self.value if self.model == "power" else None

    @property
    def rate(self) -> Optional[float]:
        return self.value if self.model == "exponential" else None


def fit_decay(times, values, model: str, window: Optional[Tuple[float, float]] = None) -> DecayFit:
    """
    Наименьшие квадраты для log y: по log(1+t) (степенной закон) или по t (экспонента).

    Args:
        times: Моменты времени
        values: Значения столбца трассы
        model: "power" или "exponential"
        window: Окно [t_lo, t_hi]; по умолчанию вторая половина трассы

    Returns:
        DecayFit с показателем (power) или скоростью (exponential)
    """
    if model == "exp":
        model = "exponential"
    if model not in MODELS:
        raise ValidationError(f"Неизвестная модель затухания: {model}")
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.shape != values.shape or times.size == 0:
        raise ValidationError("Моменты времени и значения должны иметь одинаковую ненулевую длину")

    t_lo, t_hi = window if window is not None else (0.5 * times[-1], times[-1])
    if t_lo > t_hi or t_hi < times[0] or t_lo > times[-1]:
        raise ValidationError(f"Окно [{t_lo}, {t_hi}] вне трассы [{times[0]}, {times[-1]}]")
    selected = (times >= t_lo) & (times <= t_hi)
    positive = selected & (values > 0)
    trimmed = int(np.sum(selected) - np.sum(positive))
    if trimmed:
        logger.warning(f"Из окна подгонки исключено {trimmed} неположительных значений")
    if np.sum(positive) < 2:
        raise ValidationError("В окне подгонки меньше двух положительных значений")

    x = np.log1p(times[positive]) if model == "power" else times[positive]
    y = np.log(values[positive])
    slope, intercept = np.polyfit(x, y, 1)
    residual = y - (slope * x + intercept)
    total = float(np.sum((y - np.mean(y)) ** 2))
    r_squared = 1.0 - float(np.sum(residual ** 2)) / total if total > 0 else 1.0
    value = float(slope) if model == "power" else float(-slope)
    return DecayFit(model=model, value=value, intercept=float(intercept),
                    r_squared=min(max(r_squared, 0.0), 1.0), window=(float(t_lo), float(t_hi)),
                    points=int(np.sum(positive)), trimmed=trimmed)
