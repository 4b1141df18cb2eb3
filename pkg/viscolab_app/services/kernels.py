import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from viscolab_app.services.exceptions import (
    CertificationError,
    DomainError,
    UnsupportedRegimeError,
    ValidationError,
)
from viscolab_app.services.tensor_core import (
    ConvexityReport,
    VoigtTensor,
    as_tensor,
    certify_equilibrium,
    convexity_bounds,
    eig_tolerance,
    jacobi_eigenvalues,
)

logger = logging.getLogger(__name__)

KAPPA_SAMPLES = 512
POLYNOMIAL_SAMPLES = 1000
POINTWISE_TOLERANCE = 1e-10
BURGERS_SIGN_TOLERANCE = 1e-12


def _check_order(t, order: int) -> None:
    if order not in (0, 1, 2):
        raise DomainError(f"Порядок производной {order} не поддерживается (0, 1 или 2)")
    if np.any(np.asarray(t) < 0):
        raise DomainError("Ядро определено только при t >= 0")


@dataclass(frozen=True)
class PronyTerm:
    amplitude: VoigtTensor
    rate: float


@dataclass(frozen=True)
class PronyKernel:
    """Ядро в виде ряда Прони G(t) = Σ Ĝ_j exp(-r_j t)."""

    terms: Tuple[PronyTerm, ...] = ()
    dim: int = 1

    def __post_init__(self):
        terms = tuple(self.terms)
        dim = terms[0].amplitude.dim if terms else self.dim
        for term in terms:
            if term.amplitude.dim != dim:
                raise ValidationError("Слагаемые ряда Прони имеют разную размерность")
            if not math.isfinite(term.rate) or term.rate <= 0:
                raise DomainError(f"Скорость релаксации должна быть положительной, получено {term.rate}")
            report = convexity_bounds(term.amplitude)
            if report.alpha0 < -eig_tolerance(report.beta0):
                raise DomainError("Амплитуда слагаемого ряда Прони не является неотрицательно определённой")
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "dim", dim)

    @classmethod
    def from_scalars(cls, pairs: Iterable[Tuple[float, float]]) -> "PronyKernel":
        """Одномерное ядро из пар (амплитуда, скорость)."""
        return cls(terms=tuple(PronyTerm(VoigtTensor.scalar(g), float(r)) for g, r in pairs))

    @classmethod
    def empty(cls, dim: int = 1) -> "PronyKernel":
        return cls(terms=(), dim=dim)

    @property
    def family(self) -> str:
        return "prony"

    @property
    def is_empty(self) -> bool:
        return not self.terms

    @property
    def rates(self) -> np.ndarray:
        return np.array([term.rate for term in self.terms], dtype=float)

    def scalar_amplitudes(self) -> np.ndarray:
        if self.dim != 1:
            raise ValidationError("Скалярные амплитуды определены только для n=1")
        return np.array([term.amplitude.value() for term in self.terms], dtype=float)

    def eval(self, t: float, order: int = 0) -> VoigtTensor:
        _check_order(t, order)
        result = VoigtTensor.zeros(self.dim)
        for term in self.terms:
            result = result + term.amplitude * ((-term.rate) ** order * math.exp(-term.rate * t))
        return result

    def integral(self, upper: Optional[float] = None) -> VoigtTensor:
        """∫_0^upper G(τ) dτ; при upper=None интеграл по всей полуоси."""
        result = VoigtTensor.zeros(self.dim)
        for term in self.terms:
            weight = 1.0 if upper is None else -math.expm1(-term.rate * upper)
            result = result + term.amplitude * (weight / term.rate)
        return result

    def lag_values(self, times, order: int = 0) -> np.ndarray:
        times = np.asarray(times, dtype=float)
        _check_order(times, order)
        values = np.zeros_like(times)
        for amplitude, rate in zip(self.scalar_amplitudes(), self.rates):
            values += amplitude * (-rate) ** order * np.exp(-rate * times)
        return values

    def is_commuting(self) -> bool:
        return _common_direction(self) is not None

    def describe(self) -> str:
        parts = ", ".join(f"({term.amplitude.entries.tolist()}, {term.rate!r})" for term in self.terms)
        return f"prony[{parts}]"


@dataclass(frozen=True)
class PolynomialKernel:
    """Ядро G(t) = ĝ (1 + a t)^(-p) Ĝ с полиномиальным затуханием."""

    amplitude: VoigtTensor
    scale: float
    a: float
    p: float

    def __post_init__(self):
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise DomainError(f"Масштаб ядра должен быть положительным, получено {self.scale}")
        if not (self.a > 0 and math.isfinite(self.a)):
            raise DomainError(f"Параметр a должен быть положительным, получено {self.a}")
        if not (self.p > 1 and math.isfinite(self.p)):
            raise DomainError(f"Показатель p={self.p} даёт неинтегрируемое ядро")
        if not convexity_bounds(self.amplitude).strongly_convex:
            raise DomainError("Амплитуда полиномиального ядра должна быть положительно определённой")

    @property
    def family(self) -> str:
        return "polynomial"

    @property
    def dim(self) -> int:
        return self.amplitude.dim

    @property
    def is_empty(self) -> bool:
        return False

    def _factor(self, t, order: int):
        coefficient = 1.0
        for i in range(order):
            coefficient *= -(self.p + i) * self.a
        return self.scale * coefficient * (1.0 + self.a * np.asarray(t, dtype=float)) ** (-self.p - order)

    def eval(self, t: float, order: int = 0) -> VoigtTensor:
        _check_order(t, order)
        return self.amplitude * float(self._factor(t, order))

    def integral(self, upper: Optional[float] = None) -> VoigtTensor:
        tail = 0.0 if upper is None else (1.0 + self.a * upper) ** (1.0 - self.p)
        return self.amplitude * (self.scale * (1.0 - tail) / (self.a * (self.p - 1.0)))

    def lag_values(self, times, order: int = 0) -> np.ndarray:
        times = np.asarray(times, dtype=float)
        _check_order(times, order)
        return self.amplitude.value() * self._factor(times, order)

    def is_commuting(self) -> bool:
        return True

    def describe(self) -> str:
        return f"polynomial(g={self.scale!r}, a={self.a!r}, p={self.p!r}, amplitude={self.amplitude.entries.tolist()})"


KernelSpec = Union[PronyKernel, PolynomialKernel]


def _common_direction(kernel: PronyKernel) -> Optional[Tuple[np.ndarray, np.ndarray]]:
    """Общая матрица M и коэффициенты c_j, если все амплитуды равны c_j M."""
    if not kernel.terms:
        return np.zeros((1, 1)), np.zeros(0)
    base = None
    for term in kernel.terms:
        if np.any(term.amplitude.entries != 0):
            base = term.amplitude.entries
            break
    if base is None:
        return base, np.zeros(len(kernel.terms))
    norm = float(np.sum(base * base))
    coefficients = []
    for term in kernel.terms:
        c = float(np.sum(term.amplitude.entries * base)) / norm
        if np.max(np.abs(term.amplitude.entries - c * base)) > 1e-12 * max(1.0, np.max(np.abs(base))):
            return None
        coefficients.append(c)
    return base, np.array(coefficients)


# -- модели пружина-демпфер ---------------------------------------------------

@dataclass(frozen=True)
class MaxwellSpec:
    cs: float
    eta: float


@dataclass(frozen=True)
class SlsSpec:
    c1: float
    c2: float
    eta2: float


@dataclass(frozen=True)
class BurgersSpec:
    c1: float
    c2: float
    eta2: float
    eta3: float


@dataclass(frozen=True)
class ExtendedSpec:
    """Параллельное соединение звеньев с необязательной равновесной пружиной."""

    units: Tuple[Any, ...]
    equilibrium_spring: float = 0.0


SpringDashpotSpec = Union[MaxwellSpec, SlsSpec, BurgersSpec, ExtendedSpec]


@dataclass(frozen=True)
class DerivedModel:
    instantaneous: VoigtTensor
    kernel: PronyKernel
    details: Dict[str, float] = field(default_factory=dict)

    def __iter__(self):
        return iter((self.instantaneous, self.kernel))

    @property
    def equilibrium(self) -> VoigtTensor:
        return self.instantaneous - self.kernel.integral()


def _require_positive(**values: float) -> None:
    for name, value in values.items():
        if not (math.isfinite(value) and value > 0):
            raise DomainError(f"Параметр {name} должен быть положительным, получено {value}")


def derive_maxwell(cs: float, eta: float) -> DerivedModel:
    """
    Модель Максвелла: G(t) = (Cs²/η) exp(-Cs t / η), мгновенный модуль Cs.

    Args:
        cs: Жёсткость пружины
        eta: Вязкость демпфера

    Returns:
        DerivedModel с одним слагаемым Прони
    """
    _require_positive(cs=cs, eta=eta)
    kernel = PronyKernel.from_scalars([(cs * cs / eta, cs / eta)])
    return DerivedModel(VoigtTensor.scalar(cs), kernel, {"a1": cs * cs / eta, "b1": cs / eta})


def derive_sls(c1: float, c2: float, eta2: float) -> DerivedModel:
    """Стандартное линейное тело: мгновенный модуль C1 + C2, слагаемое (C2²/η2, C2/η2)."""
    _require_positive(c1=c1, c2=c2, eta2=eta2)
    kernel = PronyKernel.from_scalars([(c2 * c2 / eta2, c2 / eta2)])
    return DerivedModel(VoigtTensor.scalar(c1 + c2), kernel, {"a2": c2 * c2 / eta2, "b2": c2 / eta2})


def derive_burgers(c1: float, c2: float, eta2: float, eta3: float) -> DerivedModel:
    """
    Модель Бюргерса через разложение на простые дроби.

    Функция релаксации b1 exp(-r1 t) + b2 exp(-r2 t) переводится в ядро
    VID-формы со слагаемыми (b_j r_j, r_j); мгновенный модуль b1 + b2.

    Args:
        c1: Пружина звена Максвелла
        c2: Пружина звена Кельвина-Фойгта
        eta2: Демпфер звена Кельвина-Фойгта
        eta3: Демпфер звена Максвелла

    Returns:
        DerivedModel с двумя слагаемыми Прони и промежуточными величинами в details
    """
    _require_positive(c1=c1, c2=c2, eta2=eta2, eta3=eta3)

    b_1 = eta3 / c2 + eta3 / c1 + eta2 / c2
    b_2 = (eta3 / c1) * (eta2 / c2)
    discriminant = b_1 * b_1 - 4.0 * b_2
    if discriminant <= 0:
        raise UnsupportedRegimeError(f"Комплексные корни характеристического уравнения (D={discriminant})")

    root = math.sqrt(discriminant)
    r1 = (b_1 + root) / (2.0 * b_2)
    # r1·r2 = 1/B2
    r2 = 1.0 / (b_2 * r1)
    slope = eta2 * eta3 / c2

    # числитель (η3 + η2η3/c2 s) делится на B2 (s + r1)(s + r2)
    amplitude1 = (slope * r1 - eta3) / (b_2 * (r1 - r2))
    amplitude2 = (eta3 - slope * r2) / (b_2 * (r1 - r2))

    lower, upper = eta2 * r2 / c2, eta2 * r1 / c2
    if lower > 1.0 + BURGERS_SIGN_TOLERANCE or upper < 1.0 - BURGERS_SIGN_TOLERANCE:
        raise CertificationError(f"Нарушено условие перемежаемости корней: {lower} <= 1 <= {upper}")
    if amplitude1 < -BURGERS_SIGN_TOLERANCE or amplitude2 < -BURGERS_SIGN_TOLERANCE:
        raise CertificationError(f"Отрицательные коэффициенты релаксации b1={amplitude1}, b2={amplitude2}")
    amplitude1, amplitude2 = max(amplitude1, 0.0), max(amplitude2, 0.0)

    kernel = PronyKernel.from_scalars([(amplitude1 * r1, r1), (amplitude2 * r2, r2)])
    details = {"B1": b_1, "B2": b_2, "D": discriminant, "r1": r1, "r2": r2, "b1": amplitude1, "b2": amplitude2}
    logger.debug(f"Модель Бюргерса: r1={r1}, r2={r2}, b1={amplitude1}, b2={amplitude2}")
    return DerivedModel(VoigtTensor.scalar(amplitude1 + amplitude2), kernel, details)


def extend(models: Sequence[DerivedModel], equilibrium_spring: float = 0.0) -> DerivedModel:
    """Параллельное соединение: модули складываются, слагаемые Прони объединяются."""
    if not models:
        raise ValidationError("Список звеньев пуст")
    if equilibrium_spring < 0 or not math.isfinite(equilibrium_spring):
        raise DomainError(f"Равновесная пружина должна быть неотрицательной, получено {equilibrium_spring}")

    instantaneous = VoigtTensor.scalar(equilibrium_spring) if models[0].instantaneous.dim == 1 \
        else VoigtTensor.identity(models[0].instantaneous.dim) * equilibrium_spring
    terms: List[PronyTerm] = []
    for model in models:
        instantaneous = instantaneous + model.instantaneous
        terms.extend(model.kernel.terms)
    return DerivedModel(instantaneous, PronyKernel(terms=tuple(terms), dim=instantaneous.dim),
                        {"units": float(len(models)), "equilibrium_spring": float(equilibrium_spring)})


def derive_model(spec: SpringDashpotSpec) -> DerivedModel:
    """Вывод мгновенного модуля и ядра для любой поддерживаемой модели пружина-демпфер."""
    if isinstance(spec, MaxwellSpec):
        return derive_maxwell(spec.cs, spec.eta)
    if isinstance(spec, SlsSpec):
        return derive_sls(spec.c1, spec.c2, spec.eta2)
    if isinstance(spec, BurgersSpec):
        return derive_burgers(spec.c1, spec.c2, spec.eta2, spec.eta3)
    if isinstance(spec, ExtendedSpec):
        has_fluid_chain = any(isinstance(unit, BurgersSpec) for unit in spec.units)
        if has_fluid_chain and spec.equilibrium_spring <= 0:
            raise UnsupportedRegimeError(
                "Составная модель Бюргерса без равновесной пружины не имеет равновесной жёсткости"
            )
        return extend([derive_model(unit) for unit in spec.units], spec.equilibrium_spring)
    raise ValidationError(f"Неизвестная модель пружина-демпфер: {type(spec).__name__}")


# -- сертификация -------------------------------------------------------------

@dataclass(frozen=True)
class AssumptionReport:
    satisfied: bool
    kappa1: Optional[float] = None
    kappa2: Optional[float] = None
    kappa3: Optional[float] = None
    kappa4: Optional[float] = None
    kappa4_tilde: Optional[float] = None
    kappa5: Optional[float] = None
    kappa6: Optional[float] = None
    p: Optional[float] = None
    witness_t: Optional[float] = None
    equilibrium: Optional[ConvexityReport] = None
    flags: Tuple[str, ...] = ()
    violations: Tuple[str, ...] = ()

    def as_dict(self) -> Dict[str, Any]:
        data = {
            "satisfied": self.satisfied,
            "kappa1": self.kappa1,
            "kappa2": self.kappa2,
            "kappa3": self.kappa3,
            "kappa4": self.kappa4,
            "kappa4_tilde": self.kappa4_tilde,
            "kappa5": self.kappa5,
            "kappa6": self.kappa6,
            "p": self.p,
            "witness_t": self.witness_t,
            "flags": list(self.flags),
            "violations": list(self.violations),
        }
        if self.equilibrium is not None:
            data["mu0"] = self.equilibrium.mu0
            data["nu0"] = self.equilibrium.nu0
        return data


def _log_bounds(equilibrium: ConvexityReport) -> Tuple[Optional[float], Optional[float]]:
    kappa5 = -math.log(equilibrium.nu0) if equilibrium.nu0 > 0 else None
    kappa6 = -math.log(equilibrium.mu0) if equilibrium.mu0 > 0 else None
    return kappa5, kappa6


def _positive_finite(*values: Optional[float]) -> bool:
    return all(value is not None and math.isfinite(value) and value > 0 for value in values)


def validate_exponential(modulus, kernel: PronyKernel, t_max: Optional[float] = None,
                         n_samples: int = KAPPA_SAMPLES, cell_scale: Optional[Sequence[float]] = None
                         ) -> AssumptionReport:
    """
    Проверка условий экспоненциального затухания для ядра Прони.

    Args:
        modulus: Мгновенный модуль C
        kernel: Ядро Прони
        t_max: Правая граница сетки (по умолчанию 20 / r_min)
        n_samples: Число логарифмических узлов
        cell_scale: Масштабы амплитуды по ячейкам

    Returns:
        AssumptionReport с оценками κ1..κ4, κ̃4 и сертификатом равновесного тензора
    """
    modulus = as_tensor(modulus)
    if not isinstance(kernel, PronyKernel):
        raise ValidationError("Экспоненциальная проверка применима только к ядру Прони")

    scales = np.ones(1) if cell_scale is None else np.asarray(cell_scale, dtype=float)
    if np.any(scales < 0):
        raise DomainError("Масштабы ядра по ячейкам должны быть неотрицательными")
    max_scale = float(np.max(scales))

    flags: List[str] = []
    violations: List[str] = []

    instantaneous = convexity_bounds(modulus)
    if not instantaneous.strongly_convex:
        violations.append("instantaneous_modulus_not_strongly_convex")

    if kernel.is_empty:
        equilibrium = convexity_bounds(modulus)
        if not equilibrium.strongly_convex:
            violations.append("equilibrium_not_strongly_convex")
        kappa5, kappa6 = _log_bounds(equilibrium)
        return AssumptionReport(satisfied=not violations, kappa5=kappa5, kappa6=kappa6,
                                equilibrium=equilibrium, flags=("empty_kernel",),
                                violations=tuple(violations))

    rates = kernel.rates
    r_min, r_max = float(np.min(rates)), float(np.max(rates))
    upper = t_max if t_max is not None else 20.0 / r_min
    grid = np.concatenate(([0.0], np.geomspace(1e-6 / r_min, upper, n_samples)))

    direction = _common_direction(kernel)
    witness = None
    if direction is not None:
        _, coefficients = direction
        g = np.zeros_like(grid)
        g_dot = np.zeros_like(grid)
        g_ddot = np.zeros_like(grid)
        for c, r in zip(coefficients, rates):
            decay = c * np.exp(-r * grid)
            g += decay
            g_dot -= r * decay
            g_ddot += r * r * decay
        positive = g > 0
        if not np.any(positive):
            flags.append("zero_kernel")
            kappa1 = kappa2 = kappa3 = None
        else:
            ratio = -g_dot[positive] / g[positive]
            curvature = g_ddot[positive] / g[positive]
            kappa1, kappa2 = float(np.max(ratio)), float(np.min(ratio))
            kappa3 = float(np.max(curvature))
            witness = float(grid[positive][np.argmin(ratio)])
    else:
        flags.append("sufficient_condition_only")
        kappa1, kappa2, kappa3 = r_max, r_min, r_max * r_max

    norms = np.array([float(jacobi_eigenvalues(term.amplitude.entries)[-1]) for term in kernel.terms])
    kappa4 = float(np.sum(norms * (1.0 + rates))) * max_scale
    kappa4_tilde = r_min

    if max_scale == 1.0:
        equilibrium = certify_equilibrium(modulus, kernel)
    else:
        equilibrium = convexity_bounds(modulus - kernel.integral() * max_scale)
    if not equilibrium.strongly_convex:
        violations.append("equilibrium_not_strongly_convex")
    if not _positive_finite(kappa1, kappa2, kappa3, kappa4, kappa4_tilde):
        violations.append("kappa_not_positive")
    kappa5, kappa6 = _log_bounds(equilibrium)

    report = AssumptionReport(
        satisfied=not violations,
        kappa1=kappa1,
        kappa2=kappa2,
        kappa3=kappa3,
        kappa4=kappa4,
        kappa4_tilde=kappa4_tilde,
        kappa5=kappa5,
        kappa6=kappa6,
        witness_t=witness if violations else None,
        equilibrium=equilibrium,
        flags=tuple(flags),
        violations=tuple(violations),
    )
    logger.info(f"Проверка экспоненциальных условий: satisfied={report.satisfied}, нарушения={report.violations}")
    return report


def validate_polynomial(modulus, kernel: PolynomialKernel, n_samples: int = POLYNOMIAL_SAMPLES
                        ) -> AssumptionReport:
    """
    Замкнутые константы полиномиального ядра и поточечная проверка на сетке [0, 10³/a].

    Степень G^(1+1/p) берётся спектрально; для ядра ĝ(1+at)^(-p)Ĝ это точно.
    """
    modulus = as_tensor(modulus)
    if not isinstance(kernel, PolynomialKernel):
        raise ValidationError("Полиномиальная проверка применима только к полиномиальному ядру")
    if kernel.p <= 2:
        raise DomainError(f"Полиномиальное затухание требует p > 2, получено p={kernel.p}")

    a, p, g_hat = kernel.a, kernel.p, kernel.scale
    eigenvalues = jacobi_eigenvalues(kernel.amplitude.entries)
    lam_min, lam_max = float(eigenvalues[0]), float(eigenvalues[-1])

    kappa1 = a * p
    kappa2 = a * p * (g_hat * lam_max) ** (-1.0 / p)
    kappa3 = a * a * p * (p + 1.0) * (g_hat * lam_min) ** (-1.0 / p)
    kappa4 = g_hat * lam_max * (1.0 + a * p) * max(1.0, a ** (-p))

    flags: List[str] = []
    violations: List[str] = []
    if g_hat * lam_max > 1.0:
        flags.append("scale_above_unity")

    grid = np.concatenate(([0.0], np.geomspace(1e-6 / a, 1e3 / a, n_samples - 1)))
    worst, witness = 0.0, None
    for lam in (lam_min, lam_max):
        base = (1.0 + a * grid)
        g = g_hat * lam * base ** (-p)
        g_dot = -a * p * g_hat * lam * base ** (-p - 1.0)
        g_ddot = a * a * p * (p + 1.0) * g_hat * lam * base ** (-p - 2.0)
        power = g ** (1.0 + 1.0 / p)
        excess = np.max(np.stack([
            (-kappa1 * g - g_dot) / np.maximum(kappa1 * g, 1e-300),
            (g_dot + kappa2 * power) / np.maximum(kappa2 * power, 1e-300),
            (g_ddot - kappa3 * power) / np.maximum(kappa3 * power, 1e-300),
        ]), axis=0)
        index = int(np.argmax(excess))
        if excess[index] > worst:
            worst, witness = float(excess[index]), float(grid[index])

    envelope = g_hat * lam_max * ((1.0 + a * grid) ** (-p) + a * p * (1.0 + a * grid) ** (-p - 1.0))
    envelope_excess = (envelope - kappa4 * (1.0 + grid) ** (-p)) / (kappa4 * (1.0 + grid) ** (-p))
    index = int(np.argmax(envelope_excess))
    if envelope_excess[index] > worst:
        worst, witness = float(envelope_excess[index]), float(grid[index])
    if worst > POINTWISE_TOLERANCE:
        violations.append("pointwise_bound_violated")

    if not convexity_bounds(modulus).strongly_convex:
        violations.append("instantaneous_modulus_not_strongly_convex")
    equilibrium = certify_equilibrium(modulus, kernel)
    if not equilibrium.strongly_convex:
        violations.append("equilibrium_not_strongly_convex")
    kappa5, kappa6 = _log_bounds(equilibrium)

    report = AssumptionReport(
        satisfied=not violations,
        kappa1=kappa1,
        kappa2=kappa2,
        kappa3=kappa3,
        kappa4=kappa4,
        kappa5=kappa5,
        kappa6=kappa6,
        p=p,
        witness_t=witness if "pointwise_bound_violated" in violations else None,
        equilibrium=equilibrium,
        flags=tuple(flags),
        violations=tuple(violations),
    )
    logger.info(f"Проверка полиномиальных условий: satisfied={report.satisfied}, нарушения={report.violations}")
    return report


def validate_kernel(modulus, kernel: KernelSpec, cell_scale: Optional[Sequence[float]] = None) -> AssumptionReport:
    if isinstance(kernel, PolynomialKernel):
        return validate_polynomial(modulus, kernel)
    return validate_exponential(modulus, kernel, cell_scale=cell_scale)


@dataclass(frozen=True)
class DecayConstants:
    kappa4: float
    kappa4_tilde: Optional[float] = None
    p: Optional[float] = None


def decay_constants(kernel: KernelSpec) -> DecayConstants:
    """κ4 и скорость затухания ядра для параметров монитора энергии."""
    if isinstance(kernel, PolynomialKernel):
        lam_max = float(jacobi_eigenvalues(kernel.amplitude.entries)[-1])
        kappa4 = kernel.scale * lam_max * (1.0 + kernel.a * kernel.p) * max(1.0, kernel.a ** (-kernel.p))
        return DecayConstants(kappa4=kappa4, p=kernel.p)
    if kernel.is_empty:
        return DecayConstants(kappa4=0.0, kappa4_tilde=None)
    norms = np.array([float(jacobi_eigenvalues(term.amplitude.entries)[-1]) for term in kernel.terms])
    return DecayConstants(kappa4=float(np.sum(norms * (1.0 + kernel.rates))),
                          kappa4_tilde=float(np.min(kernel.rates)))


def kernel_is_psd(kernel: KernelSpec, times: Iterable[float]) -> bool:
    for t in times:
        report = convexity_bounds(kernel.eval(float(t)))
        if report.alpha0 < -eig_tolerance(report.beta0):
            logger.warning(f"Ядро не является неотрицательно определённым при t={t}")
            return False
    return True
