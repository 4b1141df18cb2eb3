import logging
import math
from abc import ABC, abstractmethod
from typing import Optional, Sequence

import numpy as np

from viscolab_app.services.exceptions import ConfigurationError, InsufficientHistoryError, ValidationError
from viscolab_app.services.kernels import KernelSpec, PolynomialKernel, PronyKernel

logger = logging.getLogger(__name__)

BACKENDS = ("dense", "prony")


class HereditaryHistory(ABC):
    """
    История поячейковой величины f(τ) на равномерной сетке τ_k = kΔt.

    Все интегралы по τ берутся составной формулой трапеций; ядро свёртки
    K = αG + βĠ умножается на поячейковый масштаб амплитуды.
    """

    def __init__(self, kernel: KernelSpec, dt: float, cell_scale: Sequence[float]):
        if dt <= 0 or not math.isfinite(dt):
            raise ValidationError(f"Шаг по времени должен быть положительным, получено {dt}")
        if kernel.dim != 1:
            raise ValidationError("История поддерживает только одномерные ядра")
        self.kernel = kernel
        self.dt = float(dt)
        self.cell_scale = np.asarray(cell_scale, dtype=float)
        self._levels = 0
        self._current: Optional[np.ndarray] = None
        self._initial: Optional[np.ndarray] = None

    @property
    def time_level(self) -> int:
        """Номер последнего записанного слоя (-1, если история пуста)."""
        return self._levels - 1

    @property
    def time(self) -> float:
        return self.time_level * self.dt

    @property
    def current(self) -> np.ndarray:
        self._require_levels()
        return self._current

    @property
    def initial(self) -> np.ndarray:
        self._require_levels()
        return self._initial

    def push(self, values: np.ndarray) -> None:
        values = np.asarray(values, dtype=float)
        if values.shape != self.cell_scale.shape:
            raise ValidationError(f"Ожидается {self.cell_scale.shape[0]} ячеек, получено {values.shape}")
        if self._levels == 0:
            self._initial = values.copy()
        self._append(values)
        self._current = values.copy()
        self._levels += 1

    def require_time(self, t: float) -> None:
        if self._levels == 0 or abs(t - self.time) > 1e-9 * max(1.0, abs(t)):
            raise InsufficientHistoryError(
                f"История доступна только на t={self.time} с шагом {self.dt}; запрошено t={t}"
            )

    def _require_levels(self) -> None:
        if self._levels == 0:
            raise InsufficientHistoryError("История пуста")

    @abstractmethod
    def _append(self, values: np.ndarray) -> None:
        pass

    @abstractmethod
    def convolution(self, alpha: float = 1.0, beta: float = 0.0) -> np.ndarray:
        """∫_0^t K(t-τ) f(τ) dτ по ячейкам."""

    @abstractmethod
    def box(self, alpha: float = 1.0, beta: float = 0.0) -> np.ndarray:
        """∫_0^t K(t-τ) (f(t) - f(τ))² dτ по ячейкам."""

    @abstractmethod
    def kernel_mass(self, alpha: float = 1.0, beta: float = 0.0) -> float:
        """Квадратурный ∫_0^t K(s) ds без поячейкового масштаба."""


class DenseHistory(HereditaryHistory):
    """Полная история с квадратурой трапеций; O(n) на шаг и ячейку."""

    def __init__(self, kernel: KernelSpec, dt: float, cell_scale: Sequence[float], capacity: int = 256):
        super().__init__(kernel, dt, cell_scale)
        self._values = np.zeros((max(capacity, 2), self.cell_scale.shape[0]))
        self._lags = {}

    def _append(self, values: np.ndarray) -> None:
        if self._levels >= self._values.shape[0]:
            grown = np.zeros((2 * self._values.shape[0], self._values.shape[1]))
            grown[: self._levels] = self._values[: self._levels]
            self._values = grown
        self._values[self._levels] = values

    def _lag_values(self, order: int) -> np.ndarray:
        cached = self._lags.get(order)
        if cached is None or cached.shape[0] < self._levels:
            size = self._values.shape[0]
            cached = self.kernel.lag_values(np.arange(size) * self.dt, order)
            self._lags[order] = cached
        return cached

    def _weighted_lags(self, alpha: float, beta: float) -> np.ndarray:
        """w_k K(t_n - t_k) для k = 0..n."""
        n = self.time_level
        lags = np.zeros(n + 1)
        if alpha:
            lags += alpha * self._lag_values(0)[n::-1]
        if beta:
            lags += beta * self._lag_values(1)[n::-1]
        weights = np.full(n + 1, self.dt)
        weights[0] *= 0.5
        weights[-1] *= 0.5
        return weights * lags

    def convolution(self, alpha: float = 1.0, beta: float = 0.0) -> np.ndarray:
        self._require_levels()
        if self.time_level == 0:
            return np.zeros_like(self.cell_scale)
        weighted = self._weighted_lags(alpha, beta)
        return self.cell_scale * (weighted @ self._values[: self._levels])

    def box(self, alpha: float = 1.0, beta: float = 0.0) -> np.ndarray:
        self._require_levels()
        if self.time_level == 0:
            return np.zeros_like(self.cell_scale)
        weighted = self._weighted_lags(alpha, beta)
        deviation = self._current[np.newaxis, :] - self._values[: self._levels]
        return self.cell_scale * (weighted @ (deviation * deviation))

    def kernel_mass(self, alpha: float = 1.0, beta: float = 0.0) -> float:
        self._require_levels()
        if self.time_level == 0:
            return 0.0
        return float(np.sum(self._weighted_lags(alpha, beta)))


class PronyHistory(HereditaryHistory):
    """
    Рекурсивные накопители для ядра Прони.

    Для каждого слагаемого хранятся m0 = ∫e^{-r(t-τ)}dτ, m1 = ∫e^{-r(t-τ)}f dτ
    и m2 = ∫e^{-r(t-τ)}f² dτ; рекурсия воспроизводит составную формулу трапеций.
    """

    def __init__(self, kernel: PronyKernel, dt: float, cell_scale: Sequence[float]):
        super().__init__(kernel, dt, cell_scale)
        self.amplitudes = kernel.scalar_amplitudes()
        self.rates = kernel.rates
        self.decay = np.exp(-self.rates * self.dt)
        cells = self.cell_scale.shape[0]
        terms = self.rates.shape[0]
        self.m0 = np.zeros(terms)
        self.m1 = np.zeros((terms, cells))
        self.m2 = np.zeros((terms, cells))

    def _append(self, values: np.ndarray) -> None:
        if self._levels == 0:
            return
        half = 0.5 * self.dt
        decay = self.decay[:, np.newaxis]
        previous = self._current[np.newaxis, :]
        current = values[np.newaxis, :]
        self.m0 = self.decay * self.m0 + half * (self.decay + 1.0)
        self.m1 = decay * self.m1 + half * (decay * previous + current)
        self.m2 = decay * self.m2 + half * (decay * previous * previous + current * current)

    def _term_weights(self, alpha: float, beta: float) -> np.ndarray:
        return self.amplitudes * (alpha - beta * self.rates)

    def convolution(self, alpha: float = 1.0, beta: float = 0.0) -> np.ndarray:
        self._require_levels()
        weights = self._term_weights(alpha, beta)
        return self.cell_scale * (weights @ self.m1)

    def box(self, alpha: float = 1.0, beta: float = 0.0) -> np.ndarray:
        self._require_levels()
        weights = self._term_weights(alpha, beta)
        f = self._current[np.newaxis, :]
        expanded = f * f * self.m0[:, np.newaxis] - 2.0 * f * self.m1 + self.m2
        return self.cell_scale * (weights @ expanded)

    def kernel_mass(self, alpha: float = 1.0, beta: float = 0.0) -> float:
        self._require_levels()
        return float(self._term_weights(alpha, beta) @ self.m0)


def make_history(backend: str, kernel: KernelSpec, dt: float, cell_scale: Sequence[float]) -> HereditaryHistory:
    """
    Создаёт историю выбранного типа.

    Args:
        backend: "dense" или "prony"
        kernel: Ядро релаксации
        dt: Шаг по времени
        cell_scale: Масштабы амплитуды по ячейкам

    Returns:
        HereditaryHistory
    """
    if backend not in BACKENDS:
        raise ConfigurationError(f"Неизвестный тип памяти: {backend}")
    if backend == "prony":
        if isinstance(kernel, PolynomialKernel):
            raise ConfigurationError("Рекурсивная память Прони недоступна для полиномиального ядра")
        return PronyHistory(kernel, dt, cell_scale)
    return DenseHistory(kernel, dt, cell_scale)
