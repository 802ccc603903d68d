"""Command-line experiment runners: single, density, sector-profile, optimize, validate"""
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

from ..core.cell import (CellScenario, UserPosition, average_failure_prob, compare_failure_at,
                         estimate_failure_at, failure_prob_at, max_allowable_path_loss,
                         mean_single_link_blockage, mean_single_link_blockage_numeric,
                         optimize_relays)
from ..core.exceptions import BlockageError, ConfigError
from ..core.geom2d import Point2
from ..core.mc import SampleRegion, estimate_p_all_blocked
from ..core.multilink import LinkSet, QuadratureSpec, compare_correlation, p_all_blocked
from ..core.shapes import Link, ShapeDistribution, beta, eta, mu, p_footprint
from ..utils.config import ConfigManager, ScenarioConfig

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_VALIDATION = 3

FLOAT_FORMAT = "%.10g"
CLOSED_FORM_TOLERANCE = 1e-6

SINGLE_COLUMNS = ["lambda", "d_m", "p_analytic", "p_mc", "mc_stderr"]
DENSITY_COLUMNS = ["lambda", "hmax_m", "mean_p_closed_form", "mean_p_quadrature"]
SECTOR_COLUMNS = ["d_m", "phi_deg", "p_correlated", "p_independent", "p_mc", "mc_stderr"]
OPTIMIZE_COLUMNS = ["r_m", "h_R_m", "p_blocking_only", "p_with_budget", "p_no_relay"]


@dataclass
class CheckResult:
    """One validation check; deviation is in stderr units for Monte Carlo checks"""
    name: str
    reference: float
    value: float
    deviation: float
    tolerance: float
    unit: str
    passed: bool


def write_csv(frame: pd.DataFrame, path: Path) -> Path:
    """Fixed column order, '.' decimals, '\\n' line ends"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


def single_link_p(link: Link, dist: ShapeDistribution, quad: QuadratureSpec,
                  eta_scale: float = 1.0) -> float:
    """Closed form when orientation is uniform, quadrature otherwise

    eta_scale multiplies the sweep attenuation; anything but 1 is a
    deliberately wrong model used to check that validation can fail.
    """
    if not dist.uniform_orientation:
        return p_all_blocked(LinkSet((link,)), dist, quad)
    sweep = eta(link.high, link.low, dist.height) * beta(dist) * link.length
    k = eta_scale * sweep + mu(link.low, dist.height) * p_footprint(dist)
    return float(-np.expm1(-k))


class CLIInterface:
    """Runs one subcommand against a validated scenario configuration"""

    def __init__(self, args):
        self.args = args
        self.config_manager = ConfigManager(args.config)
        self.config: ScenarioConfig = self.config_manager.apply_overrides(
            seed=getattr(args, "seed", None),
            trials=getattr(args, "trials", None),
            quad_nodes=getattr(args, "quad_nodes", None),
            no_budget=getattr(args, "no_budget", False),
            workers=getattr(args, "workers", None),
        )
        self._configure_logging()

        self.commands = {
            "single": self.cmd_single,
            "density": self.cmd_density,
            "sector-profile": self.cmd_sector_profile,
            "optimize": self.cmd_optimize,
            "validate": self.cmd_validate,
        }

    def _configure_logging(self):
        level = "DEBUG" if getattr(self.args, "verbose", False) else self.config.advanced.log_level
        logging.getLogger().setLevel(level.upper())

    def _output_path(self, suffix: str = ".csv") -> Optional[Path]:
        out = getattr(self.args, "out", None)
        if out:
            return Path(out)
        if self.args.command == "validate":
            return None
        return Path("results") / f"{self.args.command.replace('-', '_')}{suffix}"

    def run(self) -> int:
        """Run the selected command and return its exit code"""
        command = self.args.command
        if command not in self.commands:
            print(f"❌ Unknown command: {command}")
            return EXIT_FAILURE

        dump = getattr(self.args, "dump_config", None)
        if dump:
            path = self.config_manager.save(dump)
            print(f"💾 Effective configuration written to {path}")

        for line in self.config_manager.summary():
            print(f"   {line}")
        print(f"🚀 Running {command}...")
        start = time.time()
        code = self.commands[command]()
        print(f"⏱️ {command} finished in {time.time() - start:.1f}s")
        return code

    # ------------------------------------------------------------------ single

    def single_frame(self) -> pd.DataFrame:
        cfg = self.config
        quad = cfg.quadrature_spec()
        bs = Point2(0.0, 0.0)
        rows = []
        for density in cfg.blockers.densities:
            dist = cfg.shape_distribution(density=density)
            region = SampleRegion.for_cell(cfg.cell.radius, dist)
            for d in cfg.single.distance.values():
                link = Link(bs, Point2(d, 0.0), cfg.cell.bs_height, cfg.cell.ue_height)
                p = single_link_p(link, dist, quad)
                p_mc = stderr = math.nan
                if cfg.single.monte_carlo:
                    est = estimate_p_all_blocked(LinkSet((link,)), dist, region,
                                                 cfg.monte_carlo.trials, cfg.monte_carlo.seed,
                                                 workers=cfg.monte_carlo.workers)
                    p_mc, stderr = est.p_hat, est.stderr
                logger.info("lambda=%g d=%g m: analytic %.6f, mc %.6f", density, d, p, p_mc)
                rows.append((density, d, p, p_mc, stderr))
        return pd.DataFrame(rows, columns=SINGLE_COLUMNS)

    def cmd_single(self) -> int:
        """Single-link blockage probability against distance"""
        path = write_csv(self.single_frame(), self._output_path())
        print(f"✅ Single-link table written to {path}")
        return EXIT_OK

    # ----------------------------------------------------------------- density

    def density_frame(self) -> pd.DataFrame:
        cfg = self.config
        c, dc = cfg.cell, cfg.density
        if not cfg.shape_distribution().uniform_orientation:
            raise ConfigError("blockers.orientation_deg: the density sweep needs orientation "
                              "uniform on [0, 180] degrees")
        rows = []
        for h_max in dc.h_max:
            for density in dc.density.values():
                dist = cfg.shape_distribution(density=density, h_max=h_max)
                closed = mean_single_link_blockage(c.radius, dist, c.bs_height, c.ue_height)
                numeric = mean_single_link_blockage_numeric(c.radius, dist, c.bs_height,
                                                            c.ue_height, dc.quadrature_nodes)
                rows.append((density, h_max, closed, numeric))
        return pd.DataFrame(rows, columns=DENSITY_COLUMNS)

    def cmd_density(self) -> int:
        """Cell-averaged single-link blockage against density and building height"""
        frame = self.density_frame()
        gap = float((frame["mean_p_closed_form"] - frame["mean_p_quadrature"]).abs().max())
        if gap > CLOSED_FORM_TOLERANCE:
            logger.warning("Closed form and quadrature differ by %.3e", gap)
        path = write_csv(frame, self._output_path())
        print(f"✅ Density table written to {path} (max closed-form gap {gap:.2e})")
        return EXIT_OK

    # ---------------------------------------------------------- sector profile

    def sector_scenario(self) -> CellScenario:
        cfg = self.config
        sp = cfg.sector_profile
        dist = cfg.shape_distribution(density=sp.density, length=sp.length, width=sp.width)
        overrides = dict(relay_radius=sp.relay_radius, relay_height=sp.relay_height)
        if not sp.use_budgets:
            overrides["budgets"] = None
        return cfg.cell_scenario(shapes=dist, **overrides)

    def sector_frame(self) -> pd.DataFrame:
        cfg = self.config
        sp = cfg.sector_profile
        s = self.sector_scenario()
        quad = cfg.quadrature_spec()
        rows = []
        for phi_deg in sp.phi_deg:
            for d in sp.distance.values():
                u = UserPosition(d, math.radians(phi_deg))
                report = compare_failure_at(u, s, quad)
                p_mc = stderr = math.nan
                if sp.monte_carlo:
                    est = estimate_failure_at(u, s, sp.trials, cfg.monte_carlo.seed,
                                              workers=cfg.monte_carlo.workers)
                    p_mc, stderr = est.p_hat, est.stderr
                logger.info("phi=%g deg d=%g m: correlated %.6f, independent %.6f",
                            phi_deg, d, report.correlated, report.independent)
                rows.append((d, phi_deg, report.correlated, report.independent, p_mc, stderr))
        return pd.DataFrame(rows, columns=SECTOR_COLUMNS)

    def cmd_sector_profile(self) -> int:
        """Failure probability along rays at fixed azimuths, relay ring held fixed"""
        path = write_csv(self.sector_frame(), self._output_path())
        print(f"✅ Sector profile written to {path}")
        return EXIT_OK

    # ---------------------------------------------------------------- optimize

    def optimize_results(self) -> Dict[str, object]:
        cfg = self.config
        op, q = cfg.optimize, cfg.quadrature
        dist = cfg.shape_distribution(density=op.density)
        quad = cfg.quadrature_spec()
        template = cfg.cell_scenario(shapes=dist)
        r_grid, h_grid = op.relay_radius.values(), op.relay_height

        print("🔎 Sweeping relay positions, blocking only...")
        blocking = optimize_relays(replace(template, budgets=None), r_grid, h_grid, quad,
                                   q.radial_nodes, q.azimuth_nodes)
        if template.budgets is None:
            with_budget = blocking
        else:
            print("🔎 Sweeping relay positions with link budgets...")
            with_budget = optimize_relays(template, r_grid, h_grid, quad,
                                          q.radial_nodes, q.azimuth_nodes)
        independent = None
        if getattr(self.args, "independent", False):
            print("🔎 Sweeping relay positions under the independence assumption...")
            independent = optimize_relays(template, r_grid, h_grid, quad, q.radial_nodes,
                                          q.azimuth_nodes, independent=True)

        if dist.uniform_orientation:
            no_relay = mean_single_link_blockage(template.radius, dist, template.bs_height,
                                                 template.ue_height)
        else:
            no_relay = average_failure_prob(replace(template, relay_count=0, budgets=None), quad,
                                            q.radial_nodes, q.azimuth_nodes)
        columns = list(OPTIMIZE_COLUMNS)
        rows = [[r, h, p_b, p_w, no_relay]
                for (r, h, p_b), (_, _, p_w) in zip(blocking.table, with_budget.table)]
        if independent is not None:
            columns.append("p_independent")
            for row, (_, _, p_i) in zip(rows, independent.table):
                row.append(p_i)

        summary = {
            "blocking_only": {"r_m": blocking.relay_radius, "h_R_m": blocking.relay_height,
                              "p": blocking.failure},
            "with_budget": {"r_m": with_budget.relay_radius, "h_R_m": with_budget.relay_height,
                            "p": with_budget.failure},
            "no_relay_p": no_relay,
        }
        if template.budgets is not None:
            summary["max_path_loss_db"] = {
                name: max_allowable_path_loss(getattr(template.budgets, name))
                for name in ("bu", "br", "ru")}
        if independent is not None:
            summary["independent"] = {"r_m": independent.relay_radius,
                                      "h_R_m": independent.relay_height,
                                      "p": independent.failure}
        return {"frame": pd.DataFrame(rows, columns=columns), "summary": summary}

    def cmd_optimize(self) -> int:
        """Average failure over the relay grid plus the best placement per mode"""
        results = self.optimize_results()
        path = write_csv(results["frame"], self._output_path())
        summary_path = path.with_name(f"{path.stem}_summary.json")
        with open(summary_path, "w", encoding="utf-8") as f:
            json.dump(results["summary"], f, indent=2, sort_keys=True)
            f.write("\n")

        s = results["summary"]
        print(f"✅ Relay sweep written to {path}")
        print(f"   Blocking only: r*={s['blocking_only']['r_m']:g} m, "
              f"h_R*={s['blocking_only']['h_R_m']:g} m, P={s['blocking_only']['p']:.4f}")
        print(f"   With budgets:  r*={s['with_budget']['r_m']:g} m, "
              f"h_R*={s['with_budget']['h_R_m']:g} m, P={s['with_budget']['p']:.4f}")
        print(f"   No relays:     P={s['no_relay_p']:.4f}")
        print(f"📄 Summary written to {summary_path}")
        return EXIT_OK

    # ---------------------------------------------------------------- validate

    def _mc_check(self, name: str, analytic: float, est) -> CheckResult:
        tol = self.config.validate.tolerance_sigma
        dev = est.deviation(analytic)
        return CheckResult(name, analytic, est.p_hat, dev, tol, "stderr", dev <= tol)

    def validation_checks(self) -> List[CheckResult]:
        cfg = self.config
        v, c = cfg.validate, cfg.cell
        quad = cfg.quadrature_spec()
        seed, workers = cfg.monte_carlo.seed, cfg.monte_carlo.workers
        bs = Point2(0.0, 0.0)
        checks: List[CheckResult] = []

        for density in cfg.blockers.densities:
            dist = cfg.shape_distribution(density=density)
            region = SampleRegion.for_cell(c.radius, dist)

            if dist.uniform_orientation:
                closed = mean_single_link_blockage(c.radius, dist, c.bs_height, c.ue_height)
                numeric = mean_single_link_blockage_numeric(c.radius, dist, c.bs_height,
                                                            c.ue_height, cfg.density.quadrature_nodes)
                gap = abs(closed - numeric)
                checks.append(CheckResult(f"cell_mean lambda={density:g}", closed, numeric, gap,
                                          CLOSED_FORM_TOLERANCE, "abs", gap <= CLOSED_FORM_TOLERANCE))

            for d in v.distances:
                link = Link(bs, Point2(d, 0.0), c.bs_height, c.ue_height)
                analytic = single_link_p(link, dist, quad, eta_scale=v.debug_eta_scale)
                est = estimate_p_all_blocked(LinkSet((link,)), dist, region, v.trials, seed,
                                             workers=workers)
                checks.append(self._mc_check(f"single lambda={density:g} d={d:g}", analytic, est))

            rng = np.random.default_rng(seed)
            for k in range(v.two_link_cases):
                checks.extend(self._two_link_checks(k, rng, dist, region, quad))

        s = self.sector_scenario()
        for phi_deg in cfg.sector_profile.phi_deg:
            for d in v.sector_distances:
                u = UserPosition(d, math.radians(phi_deg))
                analytic = failure_prob_at(u, s, quad)
                est = estimate_failure_at(u, s, v.sector_trials, seed, workers=workers)
                checks.append(self._mc_check(f"sector phi={phi_deg:g} d={d:g}", analytic, est))
        return checks

    def _two_link_checks(self, k: int, rng: np.random.Generator, dist: ShapeDistribution,
                         region: SampleRegion, quad: QuadratureSpec) -> List[CheckResult]:
        """Two users seen from the BS at nearby azimuths"""
        cfg = self.config
        c, v = cfg.cell, cfg.validate
        bs = Point2(0.0, 0.0)
        phi = rng.uniform(0.0, 2.0 * math.pi)
        links = []
        for offset in (0.0, rng.uniform(-math.pi / 6.0, math.pi / 6.0)):
            d = rng.uniform(0.2 * c.radius, c.radius)
            links.append(Link(bs, Point2(d * math.cos(phi + offset), d * math.sin(phi + offset)),
                              c.bs_height, c.ue_height))
        ls = LinkSet(tuple(links))
        report = compare_correlation(ls, dist, quad)
        est = estimate_p_all_blocked(ls, dist, region, v.trials, cfg.monte_carlo.seed,
                                     workers=cfg.monte_carlo.workers)
        name = f"two_link lambda={dist.density:g} case={k}"
        ordered = report.gap >= -1e-9
        return [
            CheckResult(f"{name} ordering", report.independent, report.correlated, report.gap,
                        0.0, "gap", ordered),
            self._mc_check(name, report.correlated, est),
        ]

    def cmd_validate(self) -> int:
        """Analytic values against the Monte Carlo oracle; exit 3 on any failure"""
        checks = self.validation_checks()
        passed = all(check.passed for check in checks)
        report = {"passed": passed, "checks": [asdict(check) for check in checks]}
        text = json.dumps(report, indent=2)

        path = self._output_path(".json")
        if path is not None:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(text + "\n", encoding="utf-8")
            print(f"📄 Report written to {path}")
        else:
            print(text)

        for check in checks:
            mark = "✅" if check.passed else "❌"
            print(f"{mark} {check.name}: {check.deviation:.3g} {check.unit}")
        failed = sum(not check.passed for check in checks)
        if failed:
            print(f"❌ {failed} of {len(checks)} checks failed")
            return EXIT_VALIDATION
        print(f"🎉 All {len(checks)} checks passed")
        return EXIT_OK


def run_cli(args) -> int:
    """Entry point for main.py; returns the process exit code"""
    try:
        return CLIInterface(args).run()
    except ConfigError as e:
        print(f"❌ Configuration error: {e}")
        return EXIT_CONFIG
    except BlockageError as e:
        print(f"❌ {type(e).__name__}: {e}")
        return EXIT_FAILURE
