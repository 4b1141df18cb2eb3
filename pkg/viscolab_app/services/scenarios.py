import csv
import hashlib
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from django.conf import settings
from pydantic import BaseModel, ConfigDict, Field, model_validator
from pydantic import ValidationError as SchemaError

from viscolab_app.services.decay_bounds import DecayFit, ExpComparison, fit_decay, fit_exp_comparison
from viscolab_app.services.energy import (
    DissipationReport,
    EnergyTrace,
    IdentityReport,
    MonitorParams,
    boundedness_ratio,
    check_displacement_velocity_rate,
    check_dissipation,
    check_energy_rate,
    check_velocity_energy_rate,
    default_monitor_params,
    observed_orders,
)
from viscolab_app.services.exceptions import ConfigurationError, ValidationError
from viscolab_app.services.kernels import (
    AssumptionReport,
    BurgersSpec,
    DerivedModel,
    ExtendedSpec,
    KernelSpec,
    MaxwellSpec,
    PolynomialKernel,
    PronyKernel,
    SlsSpec,
    derive_model,
    validate_kernel,
)
from viscolab_app.services.solver import (
    InitialData,
    MaterialField1D,
    Mesh1D,
    SimConfig,
    SimulationResult,
    Simulation,
)
from viscolab_app.services.tensor_core import VoigtTensor, field_convexity_bounds

logger = logging.getLogger(__name__)

TRACE_COLUMNS = ("t", "E", "E_dot", "boxG_u", "boxG_udot", "K", "I", "B", "L", "R", "kinetic", "elastic",
                 "u_L", "v_L")
SPRING_DASHPOT_PARAMS = {
    "maxwell": ("cs", "eta"),
    "sls": ("c1", "c2", "eta2"),
    "burgers": ("c1", "c2", "eta2", "eta3"),
}


class Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class MeshSection(Section):
    length: float = Field(1.0, gt=0)
    cells: int = Field(200, ge=4)


class KernelSection(Section):
    """Ядро, заданное напрямую: ряд Прони или полиномиальное."""

    family: Literal["prony", "polynomial"]
    terms: List[Tuple[float, float]] = Field(default_factory=list)
    amplitude: float = 1.0
    scale: Optional[float] = None
    a: Optional[float] = None
    p: Optional[float] = None

    @model_validator(mode="after")
    def check_family_fields(self) -> "KernelSection":
        if self.family == "polynomial":
            if self.scale is None or self.a is None or self.p is None:
                raise ValueError("полиномиальное ядро требует поля scale, a и p")
            if self.terms:
                raise ValueError("поле terms допустимо только для ядра Прони")
        elif any(value is not None for value in (self.scale, self.a, self.p)):
            raise ValueError("поля scale, a, p допустимы только для полиномиального ядра")
        return self

    def build(self) -> KernelSpec:
        if self.family == "polynomial":
            return PolynomialKernel(VoigtTensor.scalar(self.amplitude), self.scale, self.a, self.p)
        return PronyKernel.from_scalars(self.terms)


class SpringDashpotSection(Section):
    variant: Literal["maxwell", "sls", "burgers", "extended"]
    cs: Optional[float] = None
    eta: Optional[float] = None
    c1: Optional[float] = None
    c2: Optional[float] = None
    eta2: Optional[float] = None
    eta3: Optional[float] = None
    units: List["SpringDashpotSection"] = Field(default_factory=list)
    equilibrium_spring: float = Field(0.0, ge=0)

    @model_validator(mode="after")
    def check_variant_fields(self) -> "SpringDashpotSection":
        names = ("cs", "eta", "c1", "c2", "eta2", "eta3")
        given = {name for name in names if getattr(self, name) is not None}
        if self.variant == "extended":
            if not self.units:
                raise ValueError("составная модель требует непустой список units")
            if given:
                raise ValueError(f"составная модель не принимает параметры {sorted(given)}")
            return self
        required = set(SPRING_DASHPOT_PARAMS[self.variant])
        if given != required:
            raise ValueError(f"модель {self.variant} требует ровно параметры {sorted(required)}")
        if self.units or self.equilibrium_spring:
            raise ValueError("units и equilibrium_spring допустимы только для составной модели")
        return self

    def build(self) -> Union[MaxwellSpec, SlsSpec, BurgersSpec, ExtendedSpec]:
        if self.variant == "maxwell":
            return MaxwellSpec(self.cs, self.eta)
        if self.variant == "sls":
            return SlsSpec(self.c1, self.c2, self.eta2)
        if self.variant == "burgers":
            return BurgersSpec(self.c1, self.c2, self.eta2, self.eta3)
        return ExtendedSpec(tuple(unit.build() for unit in self.units), self.equilibrium_spring)


class MaterialSection(Section):
    rho: float = Field(1.0, gt=0)
    modulus: Optional[float] = Field(None, gt=0)
    kernel_scale: float = Field(1.0, ge=0)
    kernel: Optional[KernelSection] = None
    spring_dashpot: Optional[SpringDashpotSection] = None

    @model_validator(mode="after")
    def check_exactly_one_source(self) -> "MaterialSection":
        if (self.kernel is None) == (self.spring_dashpot is None):
            raise ValueError("нужно задать ровно одно из полей kernel или spring_dashpot")
        if self.kernel is not None and self.modulus is None:
            raise ValueError("ядро, заданное напрямую, требует модуль modulus")
        if self.spring_dashpot is not None and self.modulus is not None:
            raise ValueError("для модели пружина-демпфер модуль выводится и не задаётся")
        return self


class SimSection(Section):
    t_end: float = Field(ge=0)
    dt: Optional[float] = Field(None, gt=0)
    cfl: float = Field(0.9, gt=0, le=0.9)
    s: float = Field(0.0, ge=0)
    backend: Literal["dense", "prony"] = "prony"
    stride: int = Field(1, ge=1)
    probes: List[int] = Field(default_factory=list)


class ProfileSection(Section):
    profile: Literal["zero", "mode", "cubic", "sine_squared"] = "zero"
    amplitude: float = 1.0
    k: int = Field(1, ge=1)


class InitialSection(Section):
    displacement: ProfileSection = Field(default_factory=ProfileSection)
    velocity: ProfileSection = Field(default_factory=ProfileSection)


class MonitorSection(Section):
    mode: Optional[Literal["polynomial", "exponential"]] = None
    overrides: Dict[str, float] = Field(default_factory=dict)
    calibrate: bool = True


class OutputSection(Section):
    trace: Optional[str] = None
    snapshots: Optional[str] = None
    snapshot_stride: int = Field(0, ge=0)
    fit: Optional[Literal["power", "exponential"]] = None


class ScenarioConfig(Section):
    """Сценарий расчёта: один JSON-документ со схемой версии 1."""

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    schema_version: Literal[1] = Field(alias="schema")
    name: str
    description: str = ""
    mesh: MeshSection = Field(default_factory=MeshSection)
    material: MaterialSection
    sim: SimSection
    initial: InitialSection = Field(default_factory=InitialSection)
    monitor: MonitorSection = Field(default_factory=MonitorSection)
    outputs: OutputSection = Field(default_factory=OutputSection)

    def normalized(self) -> str:
        """Каноническая JSON-форма: повторный разбор даёт равную конфигурацию."""
        return json.dumps(self.model_dump(mode="json", by_alias=True), sort_keys=True, indent=2)

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(self.normalized().encode("utf-8")).hexdigest()


def parse_config(text: str, source: str = "<string>") -> ScenarioConfig:
    try:
        return ScenarioConfig.model_validate_json(text)
    except SchemaError as e:
        raise ConfigurationError(f"{source}: конфигурация не прошла проверку схемы:\n{e}") from e


def load_config(path: Union[str, Path]) -> ScenarioConfig:
    """
    Читает и проверяет конфигурацию сценария.

    Args:
        path: Путь к JSON-файлу

    Returns:
        ScenarioConfig

    Raises:
        ConfigurationError: Файл отсутствует, не является JSON или не проходит схему
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigurationError(f"{path}: не удалось прочитать конфигурацию ({e.strerror or e})") from e
    return parse_config(text, str(path))


def scenario_path(name: str) -> Path:
    """Путь к сценарию из встроенной библиотеки по имени или пути."""
    candidate = Path(name)
    if candidate.suffix == ".json" or candidate.exists():
        return candidate
    return Path(settings.VIDLAB_SCENARIO_DIR) / f"{name}.json"


def bundled_scenarios() -> List[Path]:
    return sorted(Path(settings.VIDLAB_SCENARIO_DIR).glob("*.json"))


def resolve_output(path: Optional[str], output_dir: Optional[Union[str, Path]] = None) -> Optional[Path]:
    if path is None:
        return None
    resolved = Path(path)
    if not resolved.is_absolute():
        resolved = Path(output_dir or settings.VIDLAB_OUTPUT_DIR) / resolved
    return resolved


# -- сборка объектов расчёта -------------------------------------------------

def build_mesh(config: ScenarioConfig) -> Mesh1D:
    return Mesh1D(config.mesh.length, config.mesh.cells)


@dataclass(frozen=True)
class BuiltMaterial:
    material: MaterialField1D
    modulus: VoigtTensor
    derived: Optional[DerivedModel] = None


def build_material(config: ScenarioConfig, mesh: Mesh1D) -> BuiltMaterial:
    section = config.material
    derived = None
    if section.spring_dashpot is not None:
        derived = derive_model(section.spring_dashpot.build())
        modulus, kernel = derived
    else:
        modulus, kernel = VoigtTensor.scalar(section.modulus), section.kernel.build()
    material = MaterialField1D.uniform(mesh, modulus.value(), kernel, rho=section.rho,
                                       kernel_scale=section.kernel_scale)
    return BuiltMaterial(material, modulus, derived)


def profile_values(section: ProfileSection, mesh: Mesh1D) -> np.ndarray:
    """Профиль начальных данных в узлах; все профили обращаются в 0 при x = 0."""
    x = mesh.nodes / mesh.length
    if section.profile == "zero":
        values = np.zeros_like(x)
    elif section.profile == "mode":
        values = np.sin((2 * section.k - 1) * math.pi * x / 2.0)
    elif section.profile == "cubic":
        values = x * x * (3.0 - 2.0 * x)
    else:
        values = np.sin(math.pi * x) ** 2
    values = section.amplitude * values
    values[0] = 0.0
    return values


def build_initial(config: ScenarioConfig, mesh: Mesh1D) -> InitialData:
    return InitialData(profile_values(config.initial.displacement, mesh),
                       profile_values(config.initial.velocity, mesh))


def build_sim_config(config: ScenarioConfig) -> SimConfig:
    sim = config.sim
    return SimConfig(t_end=sim.t_end, dt=sim.dt, cfl=sim.cfl, s=sim.s, backend=sim.backend, stride=sim.stride,
                     probes=tuple(sim.probes), snapshot_stride=config.outputs.snapshot_stride)


def build_monitor_params(config: ScenarioConfig, mesh: Mesh1D, material: MaterialField1D) -> MonitorParams:
    bounds = field_convexity_bounds([VoigtTensor.scalar(value) for value in material.modulus])
    return default_monitor_params(bounds.alpha0, bounds.beta0, mesh.length, material.kernel,
                                  mode=config.monitor.mode, overrides=config.monitor.overrides)


def build_simulation(config: ScenarioConfig) -> Tuple[Simulation, BuiltMaterial]:
    mesh = build_mesh(config)
    built = build_material(config, mesh)
    simulation = Simulation(mesh, built.material, build_sim_config(config), build_initial(config, mesh))
    return simulation, built


# -- выполнение сценария -----------------------------------------------------

@dataclass
class ScenarioOutcome:
    config: ScenarioConfig
    result: SimulationResult
    assumptions: AssumptionReport
    dissipation: DissipationReport
    boundedness: float
    fit: Optional[DecayFit] = None
    exp_comparison: Optional[ExpComparison] = None
    trace_path: Optional[Path] = None
    snapshot_path: Optional[Path] = None
    derived: Optional[DerivedModel] = None

    @property
    def trace(self) -> EnergyTrace:
        return self.result.trace

    @property
    def final_energy(self) -> Optional[float]:
        return self.trace.samples[-1].E if self.trace.samples else None


def run_scenario(config: ScenarioConfig, fit: Optional[str] = None, write: bool = True,
                 output_dir: Optional[Union[str, Path]] = None) -> ScenarioOutcome:
    """
    Выполняет сценарий: сертификация ядра, расчёт, проверки энергии и запись CSV.

    Args:
        config: Проверенная конфигурация
        fit: Модель затухания для подгонки E ("power" или "exponential"); по умолчанию из outputs.fit
        write: Записывать ли трассу и снимки на диск
        output_dir: Каталог для относительных путей вывода

    Returns:
        ScenarioOutcome
    """
    simulation, built = build_simulation(config)
    assumptions = validate_kernel(built.modulus, built.material.kernel, built.material.kernel_scale)
    if not assumptions.satisfied:
        logger.warning(f"Сценарий {config.name}: ядро не прошло сертификацию {assumptions.violations}")

    params = build_monitor_params(config, simulation.mesh, built.material)
    result = simulation.run(params=params, calibrate=config.monitor.calibrate)
    trace = result.trace
    trace.metadata.update({"scenario": config.name, "config_hash": config.config_hash})

    outcome = ScenarioOutcome(
        config=config,
        result=result,
        assumptions=assumptions,
        dissipation=check_dissipation(trace),
        boundedness=boundedness_ratio(trace),
        derived=built.derived,
    )
    if not outcome.dissipation.passed:
        logger.warning(f"Сценарий {config.name}: энергия растёт на {outcome.dissipation.worst_excess} "
                       f"при t={outcome.dissipation.worst_t}")

    model = fit or config.outputs.fit
    if model is not None and len(trace) >= 2:
        outcome.fit = fit_decay(trace.times, trace.column("E"), model)
    if result.params.mode == "exponential" and not built.material.kernel.is_empty:
        outcome.exp_comparison = fit_exp_comparison(trace.times, trace.column("L"), result.params.kappa4_tilde)

    if write:
        outcome.trace_path = resolve_output(config.outputs.trace, output_dir)
        if outcome.trace_path is not None:
            write_trace_csv(trace, outcome.trace_path, config.sim.probes)
        outcome.snapshot_path = resolve_output(config.outputs.snapshots, output_dir)
        if outcome.snapshot_path is not None:
            write_snapshots_csv(result, outcome.snapshot_path)
    logger.info(f"Сценарий {config.name} завершён: {len(trace)} отсчётов, E(T)={outcome.final_energy}")
    return outcome


# -- CSV ---------------------------------------------------------------------

def trace_header(probes: Sequence[int]) -> List[str]:
    return list(TRACE_COLUMNS) + [f"u_p{index}" for index in probes]


def write_trace_csv(trace: EnergyTrace, path: Union[str, Path], probes: Sequence[int] = ()) -> Path:
    """Трасса энергии в CSV; числа записываются кратчайшим точным десятичным представлением."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(trace_header(probes))
        for sample in trace.samples:
            row = [getattr(sample, name) for name in TRACE_COLUMNS] + list(sample.probes)
            writer.writerow([repr(float(value)) for value in row])
    return path


def write_snapshots_csv(result: SimulationResult, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["t", "x", "u"])
        for t, displacement in result.snapshots:
            for x, u in zip(result.nodes, displacement):
                writer.writerow([repr(float(t)), repr(float(x)), repr(float(u))])
    return path


@dataclass
class TraceTable:
    columns: Dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def times(self) -> np.ndarray:
        return self.columns["t"]

    def column(self, name: str) -> np.ndarray:
        if name not in self.columns:
            raise ValidationError(f"Столбец {name} отсутствует в трассе; доступны {sorted(self.columns)}")
        return self.columns[name]


def read_trace_csv(path: Union[str, Path]) -> TraceTable:
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as handle:
            rows = list(csv.reader(handle))
    except OSError as e:
        raise ConfigurationError(f"{path}: не удалось прочитать трассу ({e.strerror or e})") from e
    if not rows or "t" not in rows[0]:
        raise ValidationError(f"{path}: файл не содержит заголовка трассы")
    header, body = rows[0], rows[1:]
    try:
        data = np.array([[float(value) for value in row] for row in body], dtype=float).reshape(len(body), len(header))
    except ValueError as e:
        raise ValidationError(f"{path}: некорректная строка трассы ({e})") from e
    return TraceTable({name: data[:, index] for index, name in enumerate(header)})


# -- сходимость тождеств -----------------------------------------------------

@dataclass(frozen=True)
class ConvergenceStudy:
    dts: Tuple[float, ...]
    reports: Dict[str, Tuple[IdentityReport, ...]]

    def orders(self) -> Dict[str, List[float]]:
        return {name: observed_orders([report.max_residual for report in reports])
                for name, reports in self.reports.items()}


def identity_convergence(config: ScenarioConfig, refinements: int = 2) -> ConvergenceStudy:
    """
    Повторяет сценарий с шагами Δt, Δt/2, ... (запись каждого шага) и собирает
    невязки тождеств для E, E(·,u̇) и ∫u̇u.
    """
    base_dt = config.sim.dt
    if base_dt is None:
        simulation, _ = build_simulation(config)
        base_dt = simulation.dt
    dts = tuple(base_dt / 2 ** level for level in range(refinements + 1))
    checks = {"energy_rate": check_energy_rate, "velocity_energy_rate": check_velocity_energy_rate,
              "displacement_velocity_rate": check_displacement_velocity_rate}
    reports: Dict[str, List[IdentityReport]] = {name: [] for name in checks}
    for dt in dts:
        refined = config.model_copy(update={"sim": config.sim.model_copy(update={"dt": dt, "stride": 1})})
        simulation, built = build_simulation(refined)
        params = build_monitor_params(refined, simulation.mesh, built.material)
        trace = simulation.run(params=params, calibrate=False).trace
        for name, check in checks.items():
            reports[name].append(check(trace))
        logger.info(f"Сходимость тождеств: Δt={dt}, шагов {simulation.n_steps}")
    return ConvergenceStudy(dts, {name: tuple(items) for name, items in reports.items()})
