import logging
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from viscolab_app.services.exceptions import DomainError, ValidationError

logger = logging.getLogger(__name__)

VOIGT_SIZES = {1: 1, 2: 3, 3: 6}
JACOBI_TOLERANCE = 1e-14
JACOBI_MAX_SWEEPS = 100
SYMMETRY_TOLERANCE = 1e-12


@dataclass(frozen=True)
class VoigtTensor:
    """Тензор 4-го ранга с главной симметрией в нотации Фойгта.

    Матрица хранится только в симметризованном виде, поэтому
    entries[i, j] == entries[j, i] выполняется побитово.
    """

    dim: int
    entries: np.ndarray

    def __post_init__(self):
        if self.dim not in VOIGT_SIZES:
            raise ValidationError(f"Размерность пространства {self.dim} не поддерживается (ожидается 1, 2 или 3)")

        matrix = np.array(self.entries, dtype=float)
        size = VOIGT_SIZES[self.dim]
        if matrix.shape != (size, size):
            raise ValidationError(f"Для n={self.dim} ожидается матрица {size}x{size}, получено {matrix.shape}")
        if not np.all(np.isfinite(matrix)):
            raise ValidationError("Тензор содержит нечисловые элементы")

        scale = max(1.0, float(np.max(np.abs(matrix))))
        if np.max(np.abs(matrix - matrix.T)) > SYMMETRY_TOLERANCE * scale:
            raise ValidationError("Нарушена главная симметрия тензора")

        matrix = 0.5 * (matrix + matrix.T)
        matrix.setflags(write=False)
        object.__setattr__(self, "entries", matrix)

    @classmethod
    def from_matrix(cls, matrix) -> "VoigtTensor":
        """Восстанавливает размерность пространства по размеру матрицы Фойгта."""
        matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
        sizes = {size: dim for dim, size in VOIGT_SIZES.items()}
        if matrix.shape[0] not in sizes:
            raise ValidationError(f"Матрица {matrix.shape} не является матрицей Фойгта")
        return cls(dim=sizes[matrix.shape[0]], entries=matrix)

    @classmethod
    def scalar(cls, value: float) -> "VoigtTensor":
        return cls(dim=1, entries=np.array([[float(value)]]))

    @classmethod
    def identity(cls, dim: int) -> "VoigtTensor":
        return cls(dim=dim, entries=np.eye(VOIGT_SIZES.get(dim, 0)))

    @classmethod
    def zeros(cls, dim: int) -> "VoigtTensor":
        size = VOIGT_SIZES.get(dim, 0)
        return cls(dim=dim, entries=np.zeros((size, size)))

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    def value(self) -> float:
        """Скалярное значение одномерного тензора."""
        if self.dim != 1:
            raise ValidationError("Скалярное значение определено только для n=1")
        return float(self.entries[0, 0])

    def quadratic_form(self, w: np.ndarray) -> float:
        """Значение (Tw):w для вектора Фойгта w."""
        w = np.asarray(w, dtype=float)
        return float(w @ self.entries @ w)

    def __add__(self, other: "VoigtTensor") -> "VoigtTensor":
        self._check_compatible(other)
        return VoigtTensor(self.dim, self.entries + other.entries)

    def __sub__(self, other: "VoigtTensor") -> "VoigtTensor":
        self._check_compatible(other)
        return VoigtTensor(self.dim, self.entries - other.entries)

    def __mul__(self, factor: float) -> "VoigtTensor":
        return VoigtTensor(self.dim, self.entries * float(factor))

    __rmul__ = __mul__

    def _check_compatible(self, other: "VoigtTensor") -> None:
        if not isinstance(other, VoigtTensor) or other.dim != self.dim:
            raise ValidationError("Тензоры разных размерностей несовместимы")


@dataclass(frozen=True)
class ConvexityReport:
    """Границы квадратичной формы тензора.

    Для равновесного тензора поля alpha0/beta0 читаются как mu0/nu0.
    """

    alpha0: float
    beta0: float
    strongly_convex: bool

    @property
    def mu0(self) -> float:
        return self.alpha0

    @property
    def nu0(self) -> float:
        return self.beta0


def jacobi_eigenvalues(matrix, tolerance: float = JACOBI_TOLERANCE,
                       max_sweeps: int = JACOBI_MAX_SWEEPS) -> np.ndarray:
    """
    Собственные значения симметричной матрицы циклическим методом Якоби.

    Args:
        matrix: Симметричная квадратная матрица
        tolerance: Порог по норме Фробениуса внедиагональной части относительно ||A||
        max_sweeps: Максимальное число проходов

    Returns:
        Собственные значения по возрастанию
    """
    a = np.array(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"Ожидается квадратная матрица, получено {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError("Матрица содержит нечисловые элементы")

    n = a.shape[0]
    norm = np.linalg.norm(a)
    if norm == 0.0:
        return np.zeros(n)
    threshold = tolerance * norm

    for _ in range(max_sweeps):
        off_diagonal = np.sqrt(np.sum(a ** 2) - np.sum(np.diag(a) ** 2))
        if off_diagonal <= threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if a[p, q] == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * a[p, q])
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0)) if theta != 0.0 else 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rotation = np.eye(n)
                rotation[p, p] = c
                rotation[q, q] = c
                rotation[p, q] = s
                rotation[q, p] = -s
                a = rotation.T @ a @ rotation
    else:
        logger.warning(f"Метод Якоби не сошёлся за {max_sweeps} проходов")

    return np.sort(np.diag(a))


def eig_tolerance(beta0: float) -> float:
    return 1e-10 * max(1.0, beta0)


def convexity_bounds(tensor: VoigtTensor) -> ConvexityReport:
    """
    Границы alpha0|w|^2 <= (Tw):w <= beta0|w|^2 для симметричных w.

    Args:
        tensor: Тензор в нотации Фойгта

    Returns:
        Отчёт с минимальным и максимальным собственными значениями
    """
    eigenvalues = jacobi_eigenvalues(tensor.entries)
    alpha0, beta0 = float(eigenvalues[0]), float(eigenvalues[-1])
    return ConvexityReport(alpha0=alpha0, beta0=beta0, strongly_convex=alpha0 > eig_tolerance(beta0))


def field_convexity_bounds(tensors: Sequence[VoigtTensor]) -> ConvexityReport:
    """Сертификация кусочно-постоянного поля: минимум и максимум по ячейкам."""
    if not tensors:
        raise ValidationError("Пустое поле тензоров")
    reports = [convexity_bounds(tensor) for tensor in tensors]
    alpha0 = min(report.alpha0 for report in reports)
    beta0 = max(report.beta0 for report in reports)
    return ConvexityReport(alpha0=alpha0, beta0=beta0, strongly_convex=alpha0 > eig_tolerance(beta0))


def equilibrium_tensor(modulus: VoigtTensor, kernel) -> VoigtTensor:
    """
    Равновесный тензор C - ∫_0^∞ G(t) dt.

    Args:
        modulus: Мгновенный модуль C
        kernel: Ядро релаксации (PronyKernel или PolynomialKernel)

    Returns:
        Равновесный тензор той же размерности
    """
    if kernel.dim != modulus.dim:
        raise DomainError(f"Размерность ядра {kernel.dim} не совпадает с размерностью модуля {modulus.dim}")
    return modulus - kernel.integral()


def certify_equilibrium(modulus: VoigtTensor, kernel) -> ConvexityReport:
    """Проверка сильной выпуклости равновесного тензора; поля отчёта читаются как mu0, nu0."""
    return convexity_bounds(equilibrium_tensor(modulus, kernel))


def as_tensor(value: Union[VoigtTensor, float, Sequence]) -> VoigtTensor:
    if isinstance(value, VoigtTensor):
        return value
    if np.isscalar(value):
        return VoigtTensor.scalar(float(value))
    return VoigtTensor.from_matrix(value)
