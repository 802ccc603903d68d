"""
src/utils/config.py - Scenario configuration manager

YAML (or JSON) documents are validated section by section into dataclasses.
Unknown keys, wrong types and out-of-range values are collected and raised
together as one ConfigError.
"""

import logging
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import yaml

from ..core.cell import CellScenario, LinkBudget, LinkBudgets
from ..core.exceptions import ConfigError, InvalidArgumentError
from ..core.multilink import QuadratureSpec
from ..core.shapes import DETERMINISTIC, UNIFORM, ScalarDist, ShapeDistribution

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_PATH = "config/default.yaml"


@dataclass
class CellConfig:
    """Cell geometry and relay ring"""
    radius: float = 300.0
    bs_height: float = 40.0
    ue_height: float = 1.5
    relay_count: int = 3
    relay_radius: float = 150.0
    relay_height: float = 20.0
    sectorized: bool = True
    bs_relay_los_assumed: bool = False


@dataclass
class BlockerConfig:
    """Blocker law; orientation in degrees, densities in blockers per m^2"""
    densities: List[float] = field(default_factory=lambda: [1e-4, 2.2e-4])
    length: Dict[str, Any] = field(default_factory=lambda: {"kind": "uniform", "max": 30.0})
    width: Dict[str, Any] = field(default_factory=lambda: {"kind": "uniform", "max": 30.0})
    height: Optional[Dict[str, Any]] = field(default_factory=lambda: {"kind": "uniform", "max": 30.0})
    orientation_deg: Dict[str, Any] = field(default_factory=lambda: {"kind": "uniform", "max": 180.0})


@dataclass
class BudgetConfig:
    """Link budget of one link class (dBm, dBi, Hz)"""
    tx_power: float = 25.0
    tx_gain: float = 23.0
    rx_gain: float = 0.0
    sensitivity: float = -79.5
    frequency: float = 28e9
    pathloss_exponent: float = 2.3


@dataclass
class BudgetsConfig:
    enabled: bool = True
    bu: BudgetConfig = field(default_factory=BudgetConfig)
    br: BudgetConfig = field(default_factory=lambda: BudgetConfig(sensitivity=-90.2))
    ru: BudgetConfig = field(default_factory=lambda: BudgetConfig(tx_power=20.0))


@dataclass
class QuadratureConfig:
    """Blocker-dimension node counts plus the user-position grid"""
    nodes_l: int = 16
    nodes_w: int = 16
    nodes_h: int = 8
    nodes_theta: int = 16
    radial_nodes: int = 8
    azimuth_nodes: int = 8
    workers: int = 1


@dataclass
class MonteCarloConfig:
    trials: int = 100_000
    seed: int = 2021
    workers: int = 1


@dataclass
class SweepConfig:
    """Inclusive arithmetic sweep"""
    start: float = 0.0
    stop: float = 300.0
    step: float = 50.0

    def values(self) -> List[float]:
        count = int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return [round(self.start + k * self.step, 12) for k in range(count)]


@dataclass
class SingleConfig:
    distance: SweepConfig = field(default_factory=SweepConfig)
    monte_carlo: bool = True


@dataclass
class DensityConfig:
    density: SweepConfig = field(default_factory=lambda: SweepConfig(0.0, 3e-4, 2e-5))
    h_max: List[float] = field(default_factory=lambda: [30.0, 40.0])
    quadrature_nodes: int = 64


@dataclass
class SectorProfileConfig:
    """Fixed relay ring, users along rays at several azimuths"""
    distance: SweepConfig = field(default_factory=lambda: SweepConfig(10.0, 300.0, 10.0))
    phi_deg: List[float] = field(default_factory=lambda: [0.0, 15.0, 30.0])
    relay_radius: float = 180.0
    relay_height: float = 20.0
    density: float = 1e-4
    length: Optional[Dict[str, Any]] = field(default_factory=lambda: {"kind": "deterministic", "value": 15.0})
    width: Optional[Dict[str, Any]] = field(default_factory=lambda: {"kind": "deterministic", "value": 15.0})
    trials: int = 10_000
    monte_carlo: bool = True
    use_budgets: bool = False


@dataclass
class OptimizeConfig:
    relay_radius: SweepConfig = field(default_factory=lambda: SweepConfig(10.0, 290.0, 10.0))
    relay_height: List[float] = field(default_factory=lambda: [20.0])
    density: float = 1e-4


@dataclass
class ValidateConfig:
    """Analytic-vs-simulation acceptance checks"""
    distances: List[float] = field(default_factory=lambda: [0.0, 50.0, 100.0, 150.0, 200.0, 250.0, 300.0])
    sector_distances: List[float] = field(default_factory=lambda: [100.0, 170.0, 200.0, 250.0])
    two_link_cases: int = 5
    trials: int = 100_000
    sector_trials: int = 10_000
    tolerance_sigma: float = 3.0
    debug_eta_scale: float = 1.0


@dataclass
class AdvancedConfig:
    log_level: str = "INFO"


@dataclass
class ScenarioConfig:
    """Complete scenario: defaults reproduce the reference urban cell"""
    cell: CellConfig = field(default_factory=CellConfig)
    blockers: BlockerConfig = field(default_factory=BlockerConfig)
    budgets: BudgetsConfig = field(default_factory=BudgetsConfig)
    quadrature: QuadratureConfig = field(default_factory=QuadratureConfig)
    monte_carlo: MonteCarloConfig = field(default_factory=MonteCarloConfig)
    single: SingleConfig = field(default_factory=SingleConfig)
    density: DensityConfig = field(default_factory=DensityConfig)
    sector_profile: SectorProfileConfig = field(default_factory=SectorProfileConfig)
    optimize: OptimizeConfig = field(default_factory=OptimizeConfig)
    validate: ValidateConfig = field(default_factory=ValidateConfig)
    advanced: AdvancedConfig = field(default_factory=AdvancedConfig)

    def shape_distribution(self, density: Optional[float] = None, h_max: Optional[float] = None,
                           length: Optional[Dict[str, Any]] = None,
                           width: Optional[Dict[str, Any]] = None) -> ShapeDistribution:
        """Blocker law with optional per-sweep overrides"""
        b = self.blockers
        height = _scalar_dist(b.height) if b.height is not None else None
        if h_max is not None:
            height = ScalarDist.uniform(h_max)
        orientation = _scalar_dist(b.orientation_deg, scale=math.pi / 180.0)
        return ShapeDistribution(
            length=_scalar_dist(length or b.length),
            width=_scalar_dist(width or b.width),
            height=height,
            orientation=orientation,
            density=b.densities[0] if density is None else density,
        )

    def link_budgets(self) -> Optional[LinkBudgets]:
        if not self.budgets.enabled:
            return None
        return LinkBudgets(*(LinkBudget(**asdict(getattr(self.budgets, name)))
                             for name in ("bu", "br", "ru")))

    def cell_scenario(self, shapes: Optional[ShapeDistribution] = None, **overrides) -> CellScenario:
        c = self.cell
        params = dict(
            shapes=shapes or self.shape_distribution(),
            radius=c.radius, bs_height=c.bs_height, ue_height=c.ue_height,
            relay_count=c.relay_count, relay_radius=c.relay_radius,
            relay_height=c.relay_height, sectorized=c.sectorized,
            budgets=self.link_budgets(), bs_relay_los_assumed=c.bs_relay_los_assumed,
        )
        params.update(overrides)
        return CellScenario(**params)

    def quadrature_spec(self) -> QuadratureSpec:
        q = self.quadrature
        return QuadratureSpec(nodes_l=q.nodes_l, nodes_w=q.nodes_w, nodes_h=q.nodes_h,
                              nodes_theta=q.nodes_theta, workers=q.workers)


def _scalar_dist(spec: Dict[str, Any], scale: float = 1.0) -> ScalarDist:
    if spec["kind"] == UNIFORM:
        return ScalarDist.uniform(float(spec["max"]) * scale)
    return ScalarDist.deterministic(float(spec["value"]) * scale)


_SECTIONS = {f.name: f.default_factory for f in fields(ScenarioConfig)}

# nested dataclass fields, keyed by (section class, field name)
_NESTED = {
    (BudgetsConfig, "bu"): BudgetConfig,
    (BudgetsConfig, "br"): BudgetConfig,
    (BudgetsConfig, "ru"): BudgetConfig,
    (SingleConfig, "distance"): SweepConfig,
    (DensityConfig, "density"): SweepConfig,
    (SectorProfileConfig, "distance"): SweepConfig,
    (OptimizeConfig, "relay_radius"): SweepConfig,
}

_DIST_FIELDS = {
    (BlockerConfig, "length"), (BlockerConfig, "width"), (BlockerConfig, "height"),
    (BlockerConfig, "orientation_deg"), (SectorProfileConfig, "length"),
    (SectorProfileConfig, "width"),
}


def _check_type(path: str, value: Any, template: Any, problems: List[str]) -> Any:
    """Coerce value to the type of the default, or record a problem"""
    if isinstance(template, bool):
        if not isinstance(value, bool):
            problems.append(f"{path}: expected true/false, got {value!r}")
        return value
    if isinstance(template, int):
        if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
            problems.append(f"{path}: expected an integer, got {value!r}")
            return template
        return int(value)
    if isinstance(template, float):
        # PyYAML follows YAML 1.1 and reads 1e-4 (no dot) as a string
        if isinstance(value, str):
            try:
                return float(value)
            except ValueError:
                pass
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            problems.append(f"{path}: expected a number, got {value!r}")
            return template
        return float(value)
    if isinstance(template, str):
        if not isinstance(value, str):
            problems.append(f"{path}: expected a string, got {value!r}")
        return value
    if isinstance(template, list):
        if not isinstance(value, list) or not value:
            problems.append(f"{path}: expected a non-empty list, got {value!r}")
            return template
        out = []
        for i, item in enumerate(value):
            out.append(_check_type(f"{path}[{i}]", item, template[0], problems))
        return out
    return value


def _check_dist(path: str, value: Any, problems: List[str]) -> Any:
    if not isinstance(value, dict):
        problems.append(f"{path}: expected a distribution mapping, got {value!r}")
        return None
    kind = value.get("kind")
    expected = {UNIFORM: {"kind", "max"}, DETERMINISTIC: {"kind", "value"}}.get(kind)
    if expected is None:
        problems.append(f"{path}.kind: expected 'uniform' or 'deterministic', got {kind!r}")
        return None
    if set(value) != expected:
        problems.append(f"{path}: {kind} needs exactly keys {sorted(expected)}, got {sorted(value)}")
        return None
    key = "max" if kind == UNIFORM else "value"
    number = value[key]
    if isinstance(number, str):
        try:
            number = float(number)
        except ValueError:
            pass
    if isinstance(number, bool) or not isinstance(number, (int, float)) or number < 0:
        problems.append(f"{path}: parameter must be a number >= 0, got {number!r}")
        return None
    return {"kind": kind, key: float(number)}


def _build(cls, path: str, data: Any, problems: List[str]):
    """Dataclass instance from a mapping, rejecting unknown keys"""
    instance = cls()
    if data is None:
        return instance
    if not isinstance(data, dict):
        problems.append(f"{path}: expected a mapping, got {type(data).__name__}")
        return instance
    known = {f.name for f in fields(cls)}
    for key in sorted(set(data) - known):
        problems.append(f"{path}.{key}: unknown key")
    for key in sorted(set(data) & known):
        sub = f"{path}.{key}"
        value = data[key]
        if (cls, key) in _NESTED:
            setattr(instance, key, _build(_NESTED[(cls, key)], sub, value, problems))
        elif (cls, key) in _DIST_FIELDS:
            setattr(instance, key, None if value is None else _check_dist(sub, value, problems))
        else:
            setattr(instance, key, _check_type(sub, value, getattr(instance, key), problems))
    return instance


def _check_ranges(cfg: ScenarioConfig, problems: List[str]) -> None:
    def need(ok: bool, message: str):
        if not ok:
            problems.append(message)

    c = cfg.cell
    need(c.radius > 0, "cell.radius: must be > 0")
    need(0 <= c.relay_radius <= c.radius, "cell.relay_radius: must lie in [0, cell.radius]")
    need(c.relay_count >= 0, "cell.relay_count: must be >= 0")
    need(min(c.bs_height, c.ue_height, c.relay_height) >= 0, "cell: heights must be >= 0")
    need(all(d >= 0 for d in cfg.blockers.densities), "blockers.densities: must be >= 0")
    o = cfg.blockers.orientation_deg
    if o is not None:
        need(o["kind"] != UNIFORM or o["max"] == 180.0,
             "blockers.orientation_deg: uniform orientation must span [0, 180] degrees")
        need(o["kind"] != DETERMINISTIC or o["value"] <= 180.0,
             "blockers.orientation_deg: value must lie in [0, 180] degrees")
    for name in ("length", "width", "orientation_deg"):
        need(getattr(cfg.blockers, name) is not None, f"blockers.{name}: required")
    for name, q in asdict(cfg.quadrature).items():
        need(q >= 1, f"quadrature.{name}: must be >= 1")
    need(cfg.quadrature.radial_nodes >= 2 and cfg.quadrature.azimuth_nodes >= 2,
         "quadrature: radial_nodes and azimuth_nodes must be >= 2")
    m = cfg.monte_carlo
    need(m.trials >= 1, "monte_carlo.trials: must be >= 1")
    need(m.seed >= 0, "monte_carlo.seed: must be >= 0")
    need(m.workers >= 1, "monte_carlo.workers: must be >= 1")
    for path, sweep in (("single.distance", cfg.single.distance),
                        ("density.density", cfg.density.density),
                        ("sector_profile.distance", cfg.sector_profile.distance),
                        ("optimize.relay_radius", cfg.optimize.relay_radius)):
        need(sweep.step > 0 and sweep.stop >= sweep.start, f"{path}: needs step > 0 and stop >= start")
    need(cfg.single.distance.start >= 0, "single.distance: distances must be >= 0")
    need(cfg.density.density.start >= 0, "density.density: densities must be >= 0")
    need(all(h >= 0 for h in cfg.density.h_max), "density.h_max: must be >= 0")
    need(cfg.density.quadrature_nodes >= 2, "density.quadrature_nodes: must be >= 2")
    sp = cfg.sector_profile
    need(0 <= sp.relay_radius <= c.radius, "sector_profile.relay_radius: must lie in [0, cell.radius]")
    need(sp.distance.start >= 0 and sp.distance.stop <= c.radius,
         "sector_profile.distance: must lie in [0, cell.radius]")
    need(sp.density >= 0 and sp.trials >= 1, "sector_profile: density >= 0 and trials >= 1")
    op = cfg.optimize
    need(op.relay_radius.start >= 0 and op.relay_radius.stop <= c.radius,
         "optimize.relay_radius: must lie in [0, cell.radius]")
    need(op.density >= 0 and all(h >= 0 for h in op.relay_height),
         "optimize: density and relay heights must be >= 0")
    v = cfg.validate
    need(v.trials >= 1 and v.sector_trials >= 1, "validate: trials must be >= 1")
    need(v.tolerance_sigma > 0, "validate.tolerance_sigma: must be > 0")
    need(v.two_link_cases >= 0, "validate.two_link_cases: must be >= 0")
    need(all(d >= 0 for d in v.distances), "validate.distances: must be >= 0")
    need(all(0 <= d <= c.radius for d in v.sector_distances),
         "validate.sector_distances: must lie in [0, cell.radius]")
    need(cfg.advanced.log_level.upper() in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"),
         "advanced.log_level: unknown level")


def config_from_dict(data: Optional[Dict[str, Any]]) -> ScenarioConfig:
    """Validated ScenarioConfig; raises ConfigError listing every problem"""
    problems: List[str] = []
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"top level must be a mapping, got {type(data).__name__}")
    config = ScenarioConfig()
    for key in sorted(set(data) - set(_SECTIONS)):
        problems.append(f"{key}: unknown section")
    for key in sorted(set(data) & set(_SECTIONS)):
        setattr(config, key, _build(type(_SECTIONS[key]()), key, data[key], problems))
    if not problems:
        _check_ranges(config, problems)
    if not problems:
        try:
            config.shape_distribution()
            config.link_budgets()
        except InvalidArgumentError as e:
            problems.append(str(e))
    if problems:
        raise ConfigError(problems)
    return config


class ConfigManager:
    """Loads, validates, overrides and saves a ScenarioConfig"""

    def __init__(self, config_path: Optional[str] = None):
        self.config_path = Path(config_path) if config_path else Path(DEFAULT_CONFIG_PATH)
        self.config = self._load_config()

    def _load_config(self) -> ScenarioConfig:
        if not self.config_path.exists():
            logger.warning("Config %s not found, using built-in defaults", self.config_path)
            return ScenarioConfig()
        try:
            with open(self.config_path, "r", encoding="utf-8") as f:
                data = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise ConfigError(f"{self.config_path}: not valid YAML/JSON: {e}") from e
        return config_from_dict(data)

    def apply_overrides(self, seed: Optional[int] = None, trials: Optional[int] = None,
                        quad_nodes: Optional[int] = None, no_budget: bool = False,
                        workers: Optional[int] = None) -> ScenarioConfig:
        """Command-line values win over the file"""
        cfg = self.config
        if seed is not None:
            if seed < 0:
                raise ConfigError(f"--seed must be >= 0, got {seed}")
            cfg.monte_carlo.seed = seed
        if trials is not None:
            if trials < 1:
                raise ConfigError(f"--trials must be >= 1, got {trials}")
            cfg.monte_carlo.trials = trials
            cfg.validate.trials = trials
            cfg.validate.sector_trials = trials
            cfg.sector_profile.trials = trials
        if quad_nodes is not None:
            if quad_nodes < 2:
                raise ConfigError(f"--quad-nodes must be >= 2, got {quad_nodes}")
            q = cfg.quadrature
            q.nodes_l = q.nodes_w = q.nodes_theta = quad_nodes
            q.nodes_h = max(1, quad_nodes // 2)
        if no_budget:
            cfg.budgets.enabled = False
        if workers is not None:
            if workers < 1:
                raise ConfigError(f"--workers must be >= 1, got {workers}")
            cfg.quadrature.workers = workers
            cfg.monte_carlo.workers = workers
        return cfg

    def save(self, path: Optional[str] = None) -> Path:
        """Write the effective configuration as YAML"""
        target = Path(path) if path else self.config_path
        target.parent.mkdir(parents=True, exist_ok=True)
        with open(target, "w", encoding="utf-8") as f:
            yaml.safe_dump(asdict(self.config), f, default_flow_style=False, sort_keys=False, indent=2)
        return target

    def summary(self) -> Tuple[str, ...]:
        c = self.config
        return (
            f"cell R={c.cell.radius:g} m, N={c.cell.relay_count}, "
            f"{'sectorized' if c.cell.sectorized else 'non-sectorized'}",
            f"densities {', '.join(f'{d:g}' for d in c.blockers.densities)} /m^2",
            f"budgets {'on' if c.budgets.enabled else 'off'}",
        )
