import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np

from viscolab_app.services.energy import (
    EnergyMonitor,
    EnergySample,
    EnergyTrace,
    FieldSnapshot,
    MonitorParams,
    calibrate_multipliers,
    default_monitor_params,
)
from viscolab_app.services.exceptions import (
    CflViolationError,
    ConfigurationError,
    InstabilityError,
    ValidationError,
)
from viscolab_app.services.kernels import KernelSpec, PronyKernel
from viscolab_app.services.memory import BACKENDS, make_history
from viscolab_app.services.tensor_core import VoigtTensor, field_convexity_bounds

logger = logging.getLogger(__name__)

MAX_CFL = 0.9
MIN_CELLS = 4


@dataclass(frozen=True)
class Mesh1D:
    """Равномерная сетка на (0, L): узел 0 закреплён, на узле N задано условие трения."""

    length: float
    cells: int

    def __post_init__(self):
        if not (math.isfinite(self.length) and self.length > 0):
            raise ValidationError(f"Длина области должна быть положительной, получено {self.length}")
        if self.cells < MIN_CELLS:
            raise ValidationError(f"Сетка должна содержать не менее {MIN_CELLS} ячеек, получено {self.cells}")

    @property
    def h(self) -> float:
        return self.length / self.cells

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.length, self.cells + 1)

    @property
    def midpoints(self) -> np.ndarray:
        return (np.arange(self.cells) + 0.5) * self.h


@dataclass(frozen=True)
class MaterialField1D:
    rho: np.ndarray
    modulus: np.ndarray
    kernel: KernelSpec
    kernel_scale: np.ndarray

    def __post_init__(self):
        shapes = {np.shape(self.rho), np.shape(self.modulus), np.shape(self.kernel_scale)}
        if len(shapes) != 1:
            raise ValidationError("Поля материала должны быть заданы на одних и тех же ячейках")
        if np.any(~np.isfinite(self.rho)) or np.any(self.rho <= 0):
            raise ValidationError("Плотность должна быть положительной во всех ячейках")
        if np.any(self.kernel_scale < 0):
            raise ValidationError("Масштаб ядра не может быть отрицательным")
        if self.kernel.dim != 1:
            raise ValidationError("Одномерный решатель требует ядро размерности 1")
        report = field_convexity_bounds([VoigtTensor.scalar(value) for value in self.modulus])
        if not report.strongly_convex:
            raise ValidationError(f"Модуль не является сильно выпуклым (α0={report.alpha0})")

    @classmethod
    def uniform(cls, mesh: Mesh1D, modulus: float, kernel: Optional[KernelSpec] = None, rho: float = 1.0,
                kernel_scale: float = 1.0) -> "MaterialField1D":
        return cls(
            rho=np.full(mesh.cells, float(rho)),
            modulus=np.full(mesh.cells, float(modulus)),
            kernel=kernel if kernel is not None else PronyKernel.empty(),
            kernel_scale=np.full(mesh.cells, float(kernel_scale)),
        )

    @property
    def wave_speed(self) -> float:
        return float(np.max(np.sqrt(self.modulus / self.rho)))


@dataclass(frozen=True)
class SimConfig:
    t_end: float
    dt: Optional[float] = None
    cfl: float = MAX_CFL
    s: float = 0.0
    backend: str = "prony"
    stride: int = 1
    probes: Tuple[int, ...] = ()
    snapshot_stride: int = 0

    def __post_init__(self):
        if not (math.isfinite(self.t_end) and self.t_end >= 0):
            raise ConfigurationError(f"Конечное время должно быть неотрицательным, получено {self.t_end}")
        if not (0 < self.cfl <= MAX_CFL):
            raise ConfigurationError(f"Коэффициент запаса CFL должен лежать в (0, {MAX_CFL}], получено {self.cfl}")
        if self.dt is not None and not (math.isfinite(self.dt) and self.dt > 0):
            raise ConfigurationError(f"Шаг по времени должен быть положительным, получено {self.dt}")
        if self.s < 0:
            raise ConfigurationError(f"Коэффициент граничной диссипации должен быть неотрицательным, получено {self.s}")
        if self.backend not in BACKENDS:
            raise ConfigurationError(f"Неизвестный тип памяти: {self.backend}")
        if self.stride < 1 or self.snapshot_stride < 0:
            raise ConfigurationError("Шаг записи отсчётов должен быть положительным")


@dataclass(frozen=True)
class InitialData:
    """Начальные смещение f1 и скорость f2 в узлах."""

    displacement: np.ndarray
    velocity: np.ndarray

    @classmethod
    def zero(cls, mesh: Mesh1D) -> "InitialData":
        return cls(np.zeros(mesh.cells + 1), np.zeros(mesh.cells + 1))

    def scaled(self, factor: float) -> "InitialData":
        return InitialData(self.displacement * factor, self.velocity * factor)


class DiscreteOperators:
    """Сосредоточенная масса и операторы P1 на равномерной сетке."""

    def __init__(self, mesh: Mesh1D, material: MaterialField1D):
        if material.modulus.shape[0] != mesh.cells:
            raise ValidationError(f"Поля материала заданы на {material.modulus.shape[0]} ячейках, сетка содержит {mesh.cells}")
        self.mesh = mesh
        self.material = material
        self.h = mesh.h
        mass = np.zeros(mesh.cells + 1)
        cell_mass = material.rho * self.h
        mass[:-1] += 0.5 * cell_mass
        mass[1:] += 0.5 * cell_mass
        self.mass = mass

    def strain(self, u: np.ndarray) -> np.ndarray:
        return np.diff(u) / self.h

    def internal_force(self, stress: np.ndarray) -> np.ndarray:
        """Σ_e h σ_e ∂xφ_i: вклад ячейки e в узлы e (знак -) и e+1 (знак +)."""
        force = np.zeros(stress.shape[0] + 1)
        force[1:] += stress
        force[:-1] -= stress
        return force

    def stiffness(self, u: np.ndarray) -> np.ndarray:
        return self.internal_force(self.material.modulus * self.strain(u))


def assemble(mesh: Mesh1D, material: MaterialField1D) -> DiscreteOperators:
    return DiscreteOperators(mesh, material)


def stable_time_step(mesh: Mesh1D, material: MaterialField1D, cfl: float = MAX_CFL) -> float:
    return cfl * mesh.h / material.wave_speed


@dataclass
class SimState:
    n: int
    t: float
    u: np.ndarray
    v: np.ndarray
    a: np.ndarray


@dataclass
class SimulationResult:
    trace: EnergyTrace
    snapshots: List[Tuple[float, np.ndarray]]
    dt: float
    n_steps: int
    params: Optional[MonitorParams]
    nodes: np.ndarray = field(default_factory=lambda: np.zeros(0))
    displacement: Optional[np.ndarray] = None


class Simulation:
    """
    Явная схема центральных разностей для одномерной VID-системы.

    Память вычисляется в момент t^n явно; демпфирование s·u̇(L) берётся
    по центральной скорости на узле N и входит в обновление полунеявно.
    """

    def __init__(self, mesh: Mesh1D, material: MaterialField1D, config: SimConfig, initial: InitialData):
        self.mesh = mesh
        self.material = material
        self.config = config
        self.operators = assemble(mesh, material)
        self.dt, self.n_steps = self._resolve_time_step()

        f1 = np.asarray(initial.displacement, dtype=float)
        f2 = np.asarray(initial.velocity, dtype=float)
        if f1.shape != (mesh.cells + 1,) or f2.shape != (mesh.cells + 1,):
            raise ValidationError(f"Начальные данные должны содержать {mesh.cells + 1} узлов")
        if not (np.all(np.isfinite(f1)) and np.all(np.isfinite(f2))):
            raise ValidationError("Начальные данные содержат нечисловые значения")
        if f1[0] != 0.0:
            raise ValidationError(f"Начальное смещение должно обращаться в 0 на закреплённом конце, получено {f1[0]}")
        if f2[0] != 0.0:
            logger.warning("Начальная скорость на закреплённом конце отлична от нуля и будет обнулена")
            f2 = f2.copy()
            f2[0] = 0.0
        for probe in config.probes:
            if not 0 <= probe <= mesh.cells:
                raise ConfigurationError(f"Узел наблюдения {probe} вне сетки 0..{mesh.cells}")

        self.strain_history = make_history(config.backend, material.kernel, self.dt, material.kernel_scale)
        self.rate_history = make_history(config.backend, material.kernel, self.dt, material.kernel_scale)

        self.n = 0
        self.u = f1.copy()
        self.strain_history.push(self.operators.strain(self.u))
        a0 = self._acceleration(self._residual(self.u), f2)
        self.u_prev = self.u - self.dt * f2 + 0.5 * self.dt ** 2 * a0
        self.u_prev[0] = 0.0

    def _resolve_time_step(self) -> Tuple[float, int]:
        dt_max = stable_time_step(self.mesh, self.material, self.config.cfl)
        dt = self.config.dt if self.config.dt is not None else dt_max
        if dt > dt_max * (1.0 + 1e-12):
            raise CflViolationError(
                f"Шаг Δt={dt} нарушает условие устойчивости; допустимо Δt <= {dt_max}",
                suggested_dt=dt_max,
            )
        if self.config.t_end == 0:
            return dt, 0
        n_steps = int(math.ceil(self.config.t_end / dt - 1e-9))
        return self.config.t_end / n_steps, n_steps

    def _residual(self, u: np.ndarray) -> np.ndarray:
        return -self.operators.stiffness(u) + self.memory_force()

    def _acceleration(self, residual: np.ndarray, velocity: np.ndarray) -> np.ndarray:
        acceleration = residual / self.operators.mass
        acceleration[-1] -= self.config.s * velocity[-1] / self.operators.mass[-1]
        acceleration[0] = 0.0
        return acceleration

    @property
    def t(self) -> float:
        return self.n * self.dt

    def memory_force(self) -> np.ndarray:
        """Узловой вклад напряжения памяти σ_mem = ∫_0^t G(t-τ)∂xu(τ)dτ."""
        return self.operators.internal_force(self.strain_history.convolution())

    def step(self, observe: Optional[Callable[[SimState], None]] = None) -> SimState:
        dt = self.dt
        mass = self.operators.mass
        residual = self._residual(self.u)

        u_next = 2.0 * self.u - self.u_prev + dt * dt * residual / mass
        damping = self.config.s / (2.0 * dt)
        u_next[-1] = (residual[-1] + mass[-1] * (2.0 * self.u[-1] - self.u_prev[-1]) / (dt * dt)
                      + damping * self.u_prev[-1]) / (mass[-1] / (dt * dt) + damping)
        u_next[0] = 0.0
        if not np.all(np.isfinite(u_next)):
            raise InstabilityError(f"Решение перестало быть конечным на шаге {self.n}", step=self.n)

        velocity = (u_next - self.u_prev) / (2.0 * dt)
        acceleration = (u_next - 2.0 * self.u + self.u_prev) / (dt * dt)
        self.rate_history.push(self.operators.strain(velocity))
        state = SimState(self.n, self.t, self.u.copy(), velocity, acceleration)
        if observe is not None:
            observe(state)

        self.strain_history.push(self.operators.strain(u_next))
        self.u_prev, self.u = self.u, u_next
        self.n += 1
        return state

    def field_snapshot(self, state: SimState) -> FieldSnapshot:
        """Снимок для монитора энергии; истории должны быть на уровне state.n."""
        self.strain_history.require_time(state.t)
        self.rate_history.require_time(state.t)
        return FieldSnapshot(
            t=state.t,
            dt=self.dt,
            h=self.mesh.h,
            mass=self.operators.mass,
            rho=self.material.rho,
            modulus=self.material.modulus,
            kernel=self.material.kernel,
            kernel_scale=self.material.kernel_scale,
            s=self.config.s,
            u=state.u,
            v=state.v,
            a=state.a,
            initial_strain=self.strain_history.initial,
            memory_g=self.strain_history.convolution(1.0, 0.0),
            memory_gdot=self.strain_history.convolution(0.0, 1.0),
            box_g_u=self.strain_history.box(1.0, 0.0),
            box_gdot_u=self.strain_history.box(0.0, 1.0),
            box_g_udot=self.rate_history.box(1.0, 0.0),
            box_gdot_udot=self.rate_history.box(0.0, 1.0),
        )

    def run(self, params: Optional[MonitorParams] = None, calibrate: bool = True) -> SimulationResult:
        """
        Интегрирует до T_end, записывая отсчёты энергии каждые stride шагов и в последний момент.

        Args:
            params: Параметры монитора; по умолчанию вычисляются по модулю и ядру
            calibrate: Подбирать ли N1, N3 по траектории

        Returns:
            SimulationResult с трассой и снимками смещений
        """
        if params is None:
            bounds = field_convexity_bounds([VoigtTensor.scalar(value) for value in self.material.modulus])
            params = default_monitor_params(bounds.alpha0, bounds.beta0, self.mesh.length, self.material.kernel)
        monitor = EnergyMonitor(params, self.config.probes)
        samples: List[EnergySample] = []
        snapshots: List[Tuple[float, np.ndarray]] = []
        last = self.n_steps

        def observe(state: SimState) -> None:
            if state.n % self.config.stride == 0 or state.n == last:
                samples.append(monitor.sample(self.field_snapshot(state)))
            if self.config.snapshot_stride and (state.n % self.config.snapshot_stride == 0 or state.n == last):
                snapshots.append((state.t, state.u.copy()))

        logger.info(f"Старт расчёта: {self.n_steps} шагов, Δt={self.dt}, память {self.config.backend}")
        for _ in range(self.n_steps + 1):
            self.step(observe)

        calibrated = True
        if calibrate:
            params, samples, calibrated = calibrate_multipliers(samples, params)
        metadata = {
            "dt": self.dt,
            "n_steps": self.n_steps,
            "backend": self.config.backend,
            "kernel": self.material.kernel.describe(),
            "monitor": params.as_dict(),
            "multipliers_calibrated": calibrated,
        }
        trace = EnergyTrace(samples=samples, metadata=metadata)
        logger.info(f"Расчёт завершён: {len(trace)} отсчётов, E(T)={samples[-1].E if samples else None}")
        return SimulationResult(trace=trace, snapshots=snapshots, dt=self.dt, n_steps=self.n_steps,
                                params=params, nodes=self.mesh.nodes, displacement=self.u_prev.copy())


def run(mesh: Mesh1D, material: MaterialField1D, config: SimConfig, initial: InitialData,
        params: Optional[MonitorParams] = None, calibrate: bool = True) -> SimulationResult:
    return Simulation(mesh, material, config, initial).run(params=params, calibrate=calibrate)


def mode_profile(mesh: Mesh1D, k: int = 1) -> np.ndarray:
    """Собственная форма закреплённо-свободной струны sin((2k-1)πx/(2L))."""
    return np.sin((2 * k - 1) * math.pi * mesh.nodes / (2.0 * mesh.length))


def displacement_history(mesh: Mesh1D, material: MaterialField1D, config: SimConfig,
                         initial: InitialData) -> Tuple[np.ndarray, np.ndarray]:
    """Смещения во всех узлах на каждом шаге без монитора энергии."""
    simulation = Simulation(mesh, material, config, initial)
    rows: List[np.ndarray] = []
    times: List[float] = []

    def observe(state: SimState) -> None:
        times.append(state.t)
        rows.append(state.u)

    for _ in range(simulation.n_steps + 1):
        simulation.step(observe)
    return np.array(times), np.array(rows)
