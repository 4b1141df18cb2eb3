import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from viscolab_app.services.exceptions import (
    ConfigurationError,
    InsufficientHistoryError,
    ValidationError,
)
from viscolab_app.services.kernels import KernelSpec, PolynomialKernel, decay_constants
from viscolab_app.services.memory import DenseHistory, HereditaryHistory

logger = logging.getLogger(__name__)

MODES = ("polynomial", "exponential")
MULTIPLIER_START = 16.0
MULTIPLIER_LIMIT = 2.0 ** 10
DISSIPATION_RELATIVE = 1e-8
DISSIPATION_ABSOLUTE = 1e-12


@dataclass(frozen=True)
class MonitorParams:
    """Параметры функционала Ляпунова 𝓛 (или 𝓛ₑ в экспоненциальном режиме)."""

    mode: str
    gamma: float
    theta: float
    omega: float
    n1: float
    n3: float
    delta: float
    c_hat_delta: float
    c_hat5: float
    p: Optional[float] = None
    kappa4_tilde: Optional[float] = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigurationError(f"Неизвестный режим монитора: {self.mode}")
        for name in ("gamma", "theta", "omega"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValidationError(f"Параметр {name} должен быть положительным, получено {value}")
        if self.n1 < 1 or self.n3 < 1:
            raise ValidationError(f"Множители N1={self.n1}, N3={self.n3} должны быть не меньше 1")
        if self.delta <= 0 or self.c_hat_delta < 0:
            raise ValidationError("Параметры δ и ĉδ должны быть положительными")
        if self.mode == "polynomial" and (self.p is None or self.p <= 0):
            raise ConfigurationError("Полиномиальный режим монитора требует показатель p")
        if self.mode == "exponential" and (self.kappa4_tilde is None or self.kappa4_tilde <= 0):
            raise ConfigurationError("Экспоненциальный режим монитора требует скорость κ̃4")

    def weight(self, t: float) -> float:
        if self.mode == "polynomial":
            return (1.0 + t) ** (-self.p)
        return math.exp(-self.kappa4_tilde * t)

    def as_dict(self) -> Dict[str, Any]:
        return {
            "mode": self.mode,
            "gamma": self.gamma,
            "theta": self.theta,
            "omega": self.omega,
            "n1": self.n1,
            "n3": self.n3,
            "delta": self.delta,
            "c_hat_delta": self.c_hat_delta,
            "c_hat5": self.c_hat5,
            "p": self.p,
            "kappa4_tilde": self.kappa4_tilde,
        }


def default_monitor_params(alpha0: float, beta0: float, length: float, kernel: KernelSpec,
                           mode: Optional[str] = None, overrides: Optional[Dict[str, float]] = None
                           ) -> MonitorParams:
    """
    Параметры по умолчанию: θ = α0/(4β0), γ = 2θ, ω = α0/(4ĉ5), δ = α0/8.

    ĉ5 = (2L/π)² (постоянная Пуанкаре отрезка с u(0) = 0),
    ĉδ = κ4²/(4δ)·ĉ5.

    Args:
        alpha0: Нижняя граница мгновенного модуля
        beta0: Верхняя граница мгновенного модуля
        length: Длина области
        kernel: Ядро релаксации
        mode: "polynomial" или "exponential"; по умолчанию по семейству ядра
        overrides: Явные значения отдельных параметров

    Returns:
        MonitorParams
    """
    overrides = dict(overrides or {})
    is_polynomial = isinstance(kernel, PolynomialKernel)
    mode = mode or ("polynomial" if is_polynomial else "exponential")
    if mode == "exponential" and is_polynomial:
        raise ConfigurationError("Экспоненциальный режим монитора несовместим с полиномиальным ядром")

    constants = decay_constants(kernel)
    theta = alpha0 / (4.0 * beta0)
    c_hat5 = overrides.pop("c_hat5", (2.0 * length / math.pi) ** 2)
    delta = overrides.pop("delta", alpha0 / 8.0)
    params = {
        "theta": theta,
        "gamma": 2.0 * theta,
        "omega": alpha0 / (4.0 * c_hat5),
        "n1": MULTIPLIER_START,
        "n3": MULTIPLIER_START,
        "delta": delta,
        "c_hat_delta": constants.kappa4 ** 2 / (4.0 * delta) * c_hat5,
        "c_hat5": c_hat5,
        "p": constants.p,
        # у пустого ядра весовой член умножается на ĉδ = 0
        "kappa4_tilde": constants.kappa4_tilde if constants.kappa4_tilde is not None else 1.0,
    }
    unknown = set(overrides) - set(params)
    if unknown:
        raise ConfigurationError(f"Неизвестные параметры монитора: {sorted(unknown)}")
    params.update(overrides)
    return MonitorParams(mode=mode, **params)


@dataclass(frozen=True)
class FieldSnapshot:
    """Состояние дискретной задачи на момент t вместе с историческими величинами по ячейкам."""

    t: float
    dt: float
    h: float
    mass: np.ndarray
    rho: np.ndarray
    modulus: np.ndarray
    kernel: KernelSpec
    kernel_scale: np.ndarray
    s: float
    u: np.ndarray
    v: np.ndarray
    a: np.ndarray
    initial_strain: np.ndarray
    memory_g: np.ndarray
    memory_gdot: np.ndarray
    box_g_u: np.ndarray
    box_gdot_u: np.ndarray
    box_g_udot: np.ndarray
    box_gdot_udot: np.ndarray

    def strain(self, nodal: np.ndarray) -> np.ndarray:
        return np.diff(nodal) / self.h

    def cell_integral(self, values: np.ndarray) -> float:
        return float(self.h * np.sum(values))

    def node_product(self, left: np.ndarray, right: np.ndarray) -> float:
        return float(np.sum(self.mass * left * right))

    def kernel_value(self, t: float, order: int = 0) -> np.ndarray:
        return self.kernel.eval(t, order).value() * self.kernel_scale

    def kernel_integral(self) -> np.ndarray:
        return self.kernel.integral(self.t).value() * self.kernel_scale

    @property
    def unit_density(self) -> bool:
        return bool(np.all(self.rho == 1.0))


def energy_E(snapshot: FieldSnapshot, staggered: bool = False) -> float:
    """
    E(t,u) = ½[∫|u̇|² + ∫G□∂u + ∫(C - ∫_0^t G)∇u:∇u].

    При staggered=True добавляется поправка (Δt²/8)∫ü² + (Δt²/4)∫C∇u:∇ü,
    с которой центральная схема сохраняет энергию в упругом пределе точно.
    """
    strain = snapshot.strain(snapshot.u)
    effective = snapshot.modulus - snapshot.kernel_integral()
    value = 0.5 * (
        snapshot.node_product(snapshot.v, snapshot.v)
        + snapshot.cell_integral(snapshot.box_g_u)
        + snapshot.cell_integral(effective * strain * strain)
    )
    if staggered:
        dt2 = snapshot.dt ** 2
        value += dt2 / 8.0 * snapshot.node_product(snapshot.a, snapshot.a)
        value += dt2 / 4.0 * snapshot.cell_integral(snapshot.modulus * strain * snapshot.strain(snapshot.a))
    return value


def energy_E_rate(snapshot: FieldSnapshot) -> float:
    """E(t,u̇): та же квадратичная форма для скорости."""
    rate = snapshot.strain(snapshot.v)
    effective = snapshot.modulus - snapshot.kernel_integral()
    return 0.5 * (
        snapshot.node_product(snapshot.a, snapshot.a)
        + snapshot.cell_integral(snapshot.box_g_udot)
        + snapshot.cell_integral(effective * rate * rate)
    )


def functional_K(snapshot: FieldSnapshot, gamma: float) -> float:
    strain = snapshot.strain(snapshot.u)
    rate = snapshot.strain(snapshot.v)
    g0 = snapshot.kernel_value(0.0)
    memory_f = gamma * snapshot.memory_g + snapshot.memory_gdot
    return (
        0.5 * snapshot.node_product(snapshot.a, snapshot.a)
        + 0.5 * snapshot.cell_integral(snapshot.modulus * rate * rate)
        - snapshot.cell_integral(g0 * strain * rate)
        + gamma * snapshot.cell_integral(snapshot.modulus * strain * rate)
        - snapshot.cell_integral(memory_f * rate)
    )


def functional_I(snapshot: FieldSnapshot) -> float:
    strain = snapshot.strain(snapshot.u)
    g0 = snapshot.kernel_value(0.0)
    # ∫_0^t Ġ dτ = G(t) - G(0)
    gdot_mass = snapshot.kernel_value(snapshot.t) - g0
    return (
        snapshot.node_product(snapshot.a, snapshot.v)
        - 0.5 * snapshot.cell_integral(g0 * strain * strain)
        - 0.5 * snapshot.cell_integral(gdot_mass * strain * strain)
        + 0.5 * snapshot.cell_integral(snapshot.box_gdot_u)
    )


def cross_term_B(snapshot: FieldSnapshot) -> float:
    """∫(G(t)∇u(0)):∇u̇(t)."""
    rate = snapshot.strain(snapshot.v)
    return snapshot.cell_integral(snapshot.kernel_value(snapshot.t) * snapshot.initial_strain * rate)


def functional_B(energy: float, energy_rate: float, cross: float, n3: float) -> float:
    return n3 * energy + energy_rate - cross


def functional_R(snapshot: FieldSnapshot) -> float:
    strain = snapshot.strain(snapshot.u)
    rate = snapshot.strain(snapshot.v)
    return (
        snapshot.node_product(snapshot.a, snapshot.a)
        + snapshot.cell_integral(strain * strain)
        + snapshot.cell_integral(rate * rate)
    )


@dataclass(frozen=True)
class EnergySample:
    t: float
    E: float
    E_literal: float
    E_dot: float
    boxG_u: float
    boxG_udot: float
    boxGdot_u: float
    boxGdot_udot: float
    K: float
    I: float
    B: float
    L: float
    R: float
    kinetic: float
    elastic: float
    u_L: float
    v_L: float
    a_L: float
    uv: float
    cross_B: float
    rhs_energy_rate: float
    rhs_velocity_energy_rate: float
    rhs_uv_rate: float
    probes: Tuple[float, ...] = ()
    flags: Tuple[str, ...] = ()

    @property
    def M(self) -> float:
        return self.R + self.boxG_u + self.boxG_udot


def functional_L(sample: EnergySample, params: MonitorParams, e0: float, mode: Optional[str] = None) -> float:
    """𝓛 (полиномиальный вес) или 𝓛ₑ (экспоненциальный вес)."""
    mode = mode or params.mode
    if mode != params.mode:
        raise ConfigurationError(f"Режим {mode} не совпадает с режимом параметров {params.mode}")
    b = functional_B(sample.E_literal, sample.E_dot, sample.cross_B, params.n3)
    return (
        params.n1 * (b + 2.0 * params.c_hat_delta * params.weight(sample.t) * e0)
        + sample.K
        + (params.gamma - params.theta) * sample.I
        + params.omega * sample.uv
    )


def M_tilde(sample: EnergySample, params: MonitorParams, e0: float) -> float:
    return sample.M + params.weight(sample.t) * e0


@dataclass
class EnergyTrace:
    samples: List[EnergySample]
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        times = [sample.t for sample in self.samples]
        if any(later <= earlier for earlier, later in zip(times, times[1:])):
            raise ValidationError("Моменты времени в трассе должны строго возрастать")

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def times(self) -> np.ndarray:
        return np.array([sample.t for sample in self.samples])

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(sample, name) for sample in self.samples], dtype=float)

    def probe_column(self, index: int) -> np.ndarray:
        return np.array([sample.probes[index] for sample in self.samples], dtype=float)


class EnergyMonitor:
    """Вычисляет функционалы на снимках состояния; B и L пересчитываются после калибровки N1, N3."""

    def __init__(self, params: MonitorParams, probes: Sequence[int] = ()):
        self.params = params
        self.probes = tuple(probes)
        self.e0: Optional[float] = None
        self._warned_density = False

    def sample(self, snapshot: FieldSnapshot) -> EnergySample:
        flags = []
        if not snapshot.unit_density:
            flags.append("density_not_unit")
            if not self._warned_density:
                logger.warning("Плотность отлична от 1: монитор энергии вычисляется с весом ρ")
                self._warned_density = True

        strain = snapshot.strain(snapshot.u)
        rate = snapshot.strain(snapshot.v)
        accel_strain = snapshot.strain(snapshot.a)
        g_t = snapshot.kernel_value(snapshot.t)
        effective = snapshot.modulus - snapshot.kernel_integral()

        literal = energy_E(snapshot)
        energy = energy_E(snapshot, staggered=True)
        if self.e0 is None:
            self.e0 = literal
        energy_rate = energy_E_rate(snapshot)
        k_value = functional_K(snapshot, self.params.gamma)
        i_value = functional_I(snapshot)
        cross = cross_term_B(snapshot)
        box_gdot_u = snapshot.cell_integral(snapshot.box_gdot_u)
        box_gdot_udot = snapshot.cell_integral(snapshot.box_gdot_udot)
        u_l, v_l, a_l = float(snapshot.u[-1]), float(snapshot.v[-1]), float(snapshot.a[-1])
        uv = snapshot.node_product(snapshot.u, snapshot.v)
        memory_deviation = snapshot.kernel_integral() * strain - snapshot.memory_g

        sample = EnergySample(
            t=snapshot.t,
            E=energy,
            E_literal=literal,
            E_dot=energy_rate,
            boxG_u=snapshot.cell_integral(snapshot.box_g_u),
            boxG_udot=snapshot.cell_integral(snapshot.box_g_udot),
            boxGdot_u=box_gdot_u,
            boxGdot_udot=box_gdot_udot,
            K=k_value,
            I=i_value,
            B=0.0,
            L=0.0,
            R=functional_R(snapshot),
            kinetic=0.5 * snapshot.node_product(snapshot.v, snapshot.v),
            elastic=0.5 * snapshot.cell_integral(snapshot.modulus * strain * strain),
            u_L=u_l,
            v_L=v_l,
            a_L=a_l,
            uv=uv,
            cross_B=cross,
            rhs_energy_rate=(-0.5 * snapshot.cell_integral(g_t * strain * strain) + 0.5 * box_gdot_u
                     - snapshot.s * v_l * v_l),
            rhs_velocity_energy_rate=(-0.5 * snapshot.cell_integral(g_t * rate * rate) + 0.5 * box_gdot_udot
                     + snapshot.cell_integral(g_t * snapshot.initial_strain * accel_strain)
                     - snapshot.s * a_l * a_l),
            rhs_uv_rate=(snapshot.node_product(snapshot.v, snapshot.v)
                      - snapshot.cell_integral(effective * strain * strain)
                      - snapshot.cell_integral(memory_deviation * strain)
                      - snapshot.s * v_l * u_l),
            probes=tuple(float(snapshot.u[index]) for index in self.probes),
            flags=tuple(flags),
        )
        return finalize_sample(sample, self.params, self.e0)


def finalize_sample(sample: EnergySample, params: MonitorParams, e0: float) -> EnergySample:
    b = functional_B(sample.E_literal, sample.E_dot, sample.cross_B, params.n3)
    return replace(sample, B=b, L=functional_L(sample, params, e0))


def _checkpoints(samples: Sequence[EnergySample]) -> List[EnergySample]:
    if not samples:
        return []
    t_end = samples[-1].t
    times = np.array([sample.t for sample in samples])
    picked = {0}
    for fraction in (0.25, 0.5, 0.75):
        picked.add(int(np.argmin(np.abs(times - fraction * t_end))))
    return [samples[index] for index in sorted(picked)]


def _n3_holds(samples: Sequence[EnergySample], params: MonitorParams, n3: float, e0: float, e_dot0: float) -> bool:
    first = samples[0]
    b0 = functional_B(first.E_literal, first.E_dot, first.cross_B, n3)
    slack = 1e-12 * max(1.0, n3 * e0 + e_dot0)
    if not (0.5 * n3 * e0 + 0.5 * e_dot0 <= b0 + slack and b0 <= 2.0 * n3 * e0 + 2.0 * e_dot0 + slack):
        return False
    for sample in samples:
        b = functional_B(sample.E_literal, sample.E_dot, sample.cross_B, n3)
        lower = 0.5 * n3 * sample.E_literal + 0.5 * sample.E_dot
        if lower > b + params.c_hat_delta * params.weight(sample.t) * e0 + slack:
            return False
    return True


def _n1_holds(samples: Sequence[EnergySample], params: MonitorParams, n1: float, e0: float) -> bool:
    for sample in samples:
        leading = functional_B(sample.E_literal, sample.E_dot, sample.cross_B, params.n3) \
            + 2.0 * params.c_hat_delta * params.weight(sample.t) * e0
        rest = sample.K + (params.gamma - params.theta) * sample.I + params.omega * sample.uv
        if abs(rest) > 0.5 * n1 * leading + 1e-12 * max(1.0, abs(leading)):
            return False
    return True


def calibrate_multipliers(samples: Sequence[EnergySample], params: MonitorParams
                          ) -> Tuple[MonitorParams, List[EnergySample], bool]:
    """
    Подбирает N3, затем N1 удвоением от 16 до 2^10.

    N3 проверяется по двусторонней оценке B в t=0 и оценке снизу в контрольных
    точках (0, 25, 50, 75 % времени); N1 должен поглощать K + (γ-θ)I + ω∫u̇u.

    Returns:
        (параметры, пересчитанные отсчёты, признак успешной калибровки)
    """
    if not samples:
        return params, [], True
    e0, e_dot0 = samples[0].E_literal, samples[0].E_dot
    checkpoints = _checkpoints(samples)
    calibrated = True

    n3 = params.n3
    while not _n3_holds(checkpoints, params, n3, e0, e_dot0):
        if n3 >= MULTIPLIER_LIMIT:
            calibrated = False
            break
        n3 *= 2.0
    params = replace(params, n3=n3)

    n1 = params.n1
    while not _n1_holds(checkpoints, params, n1, e0):
        if n1 >= MULTIPLIER_LIMIT:
            calibrated = False
            break
        n1 *= 2.0
    params = replace(params, n1=n1)

    if not calibrated:
        logger.warning(f"Калибровка множителей не достигла цели: N1={n1}, N3={n3}")
    return params, [finalize_sample(sample, params, e0) for sample in samples], calibrated


def box_product(history: HereditaryHistory, t: float, cell_size: float, alpha: float = 1.0,
                beta: float = 0.0) -> float:
    """
    ∫_Ω K□∂f dx по истории на момент t (трапеции по τ, середины ячеек по x).

    Args:
        history: История деформаций (плотная или Прони)
        t: Момент, на который записан последний слой истории
        cell_size: Размер ячейки h
        alpha: Коэффициент при G
        beta: Коэффициент при Ġ

    Returns:
        Значение интеграла
    """
    history.require_time(t)
    return float(cell_size * np.sum(history.box(alpha, beta)))


@dataclass(frozen=True)
class IdentityReport:
    name: str
    max_residual: float
    relative_residual: float
    scale: float
    worst_t: Optional[float]
    samples: int

    def as_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "max_residual": self.max_residual,
            "relative_residual": self.relative_residual,
            "scale": self.scale,
            "worst_t": self.worst_t,
            "samples": self.samples,
        }


def _central_difference_report(name: str, times: np.ndarray, values: np.ndarray, rhs: np.ndarray) -> IdentityReport:
    if times.shape[0] < 3:
        raise InsufficientHistoryError(f"Проверка {name} требует не менее 3 отсчётов")
    steps = np.diff(times)
    if np.max(np.abs(steps - steps[0])) > 1e-9 * max(1.0, abs(steps[0])):
        raise InsufficientHistoryError(f"Проверка {name} требует равномерного шага отсчётов")
    derivative = (values[2:] - values[:-2]) / (times[2:] - times[:-2])
    residual = np.abs(derivative - rhs[1:-1])
    index = int(np.argmax(residual))
    max_residual = float(residual[index])
    scale = max(float(np.max(np.abs(rhs[1:-1]))), float(np.max(np.abs(derivative))))
    relative = max_residual / scale if scale > 0 else 0.0
    return IdentityReport(name, max_residual, relative, scale, float(times[1 + index]), int(times.shape[0]))


def check_energy_rate(trace: EnergyTrace) -> IdentityReport:
    """dE/dt = -½∫G(t)∇u:∇u + ½∫Ġ□∂u - s|u̇(L)|² по центральным разностям."""
    return _central_difference_report("energy_rate", trace.times, trace.column("E_literal"),
                                      trace.column("rhs_energy_rate"))


def check_velocity_energy_rate(trace: EnergyTrace) -> IdentityReport:
    """Тождество для E(t,u̇) с членом ∫(G(t)∇u(0)):∇ü."""
    return _central_difference_report("velocity_energy_rate", trace.times, trace.column("E_dot"),
                                      trace.column("rhs_velocity_energy_rate"))


def check_displacement_velocity_rate(trace: EnergyTrace) -> IdentityReport:
    return _central_difference_report("displacement_velocity_rate", trace.times, trace.column("uv"),
                                      trace.column("rhs_uv_rate"))


def standing_wave(length: float = 1.0, frequency: float = 2.0
                  ) -> Tuple[Callable[[np.ndarray, float], np.ndarray], Callable[[np.ndarray, float], np.ndarray]]:
    """∇v и ∇v̇ для v = sin(πx/L)·cos(ωt)."""
    wavenumber = math.pi / length

    def strain(x: np.ndarray, t: float) -> np.ndarray:
        return wavenumber * np.cos(wavenumber * x) * math.cos(frequency * t)

    def strain_rate(x: np.ndarray, t: float) -> np.ndarray:
        return -frequency * wavenumber * np.cos(wavenumber * x) * math.sin(frequency * t)

    return strain, strain_rate


def check_convolution_identity(kernel: KernelSpec, strain: Callable[[np.ndarray, float], np.ndarray],
                       strain_rate: Callable[[np.ndarray, float], np.ndarray], t_end: float, dt: float,
                       length: float = 1.0, cells: int = 16) -> IdentityReport:
    """
    Проверка тождества для свёртки ∫(∫G(t-τ)∇v(τ)dτ):∇v̇(t) на заданном поле v.

    Правая часть: -½ d/dt∫G□∂v + ½∫Ġ□∂v + ½ d/dt(∫_0^tG ∇v:∇v) - ½∫G(t)∇v:∇v;
    производные по t берутся центральными разностями, интегралы по τ трапециями.
    """
    if dt <= 0 or t_end <= 2 * dt:
        raise ValidationError("Для проверки нужно не менее трёх шагов по времени")
    steps = int(round(t_end / dt))
    h = length / cells
    x = (np.arange(cells) + 0.5) * h
    history = DenseHistory(kernel, dt, np.ones(cells), capacity=steps + 1)

    lhs = np.zeros(steps + 1)
    box_g = np.zeros(steps + 1)
    box_gdot = np.zeros(steps + 1)
    mass_form = np.zeros(steps + 1)
    g_form = np.zeros(steps + 1)
    for n in range(steps + 1):
        t = n * dt
        values = strain(x, t)
        history.push(values)
        lhs[n] = h * float(np.sum(history.convolution() * strain_rate(x, t)))
        box_g[n] = h * float(np.sum(history.box(1.0, 0.0)))
        box_gdot[n] = h * float(np.sum(history.box(0.0, 1.0)))
        form = h * float(np.sum(values * values))
        mass_form[n] = kernel.integral(t).value() * form
        g_form[n] = kernel.eval(t).value() * form

    times = np.arange(steps + 1) * dt
    rhs_derivative = (-0.5 * box_g + 0.5 * mass_form)
    derivative = (rhs_derivative[2:] - rhs_derivative[:-2]) / (2.0 * dt)
    rhs = derivative + 0.5 * box_gdot[1:-1] - 0.5 * g_form[1:-1]
    residual = np.abs(lhs[1:-1] - rhs)
    index = int(np.argmax(residual))
    scale = max(float(np.max(np.abs(lhs))), float(np.max(np.abs(rhs))))
    max_residual = float(residual[index])
    return IdentityReport("convolution_identity", max_residual, max_residual / scale if scale > 0 else 0.0,
                          scale, float(times[1 + index]), steps + 1)


def observed_orders(residuals: Sequence[float], ratio: float = 2.0) -> List[float]:
    """Наблюдаемые порядки сходимости log_ratio(r_i / r_{i+1})."""
    orders = []
    for coarse, fine in zip(residuals, residuals[1:]):
        if coarse <= 0 or fine <= 0:
            orders.append(float("inf"))
        else:
            orders.append(math.log(coarse / fine) / math.log(ratio))
    return orders


@dataclass(frozen=True)
class DissipationReport:
    passed: bool
    worst_excess: float
    worst_t: Optional[float]


def check_dissipation(trace: EnergyTrace, column: str = "E") -> DissipationReport:
    """E(t_{k+1}) <= E(t_k)(1 + 1e-8) + 1e-12·E(0) на всех соседних отсчётах."""
    values = trace.column(column)
    if values.size < 2:
        return DissipationReport(True, 0.0, None)
    allowed = values[:-1] * (1.0 + DISSIPATION_RELATIVE) + DISSIPATION_ABSOLUTE * abs(values[0])
    excess = values[1:] - allowed
    index = int(np.argmax(excess))
    worst = float(excess[index])
    return DissipationReport(worst <= 0.0, worst, float(trace.times[index + 1]) if worst > 0 else None)


def boundedness_ratio(trace: EnergyTrace) -> float:
    """max_t (E + E(·,u̇))(t) / (E + E(·,u̇))(0)."""
    total = trace.column("E") + trace.column("E_dot")
    if total.size == 0 or total[0] <= 0:
        return 1.0
    return float(np.max(total) / total[0])


def sandwich_constants(trace: EnergyTrace, params: MonitorParams) -> Tuple[Optional[float], Optional[float]]:
    """Эмпирические c̃5, c̃6 в c̃5·M̃ <= 𝓛 <= c̃6·M̃."""
    if not trace.samples:
        return None, None
    e0 = trace.samples[0].E_literal
    ratios = []
    for sample in trace.samples:
        denominator = M_tilde(sample, params, e0)
        if denominator > 0:
            ratios.append(sample.L / denominator)
    if not ratios:
        return None, None
    return float(min(ratios)), float(max(ratios))

