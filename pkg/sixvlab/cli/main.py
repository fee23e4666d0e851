"""
Command-line interface for sixvlab.
"""

import argparse
import math
import sys

import numpy as np

from ..correlation.brute_force import torus_brute_force
from ..correlation.correlation import (
    CorrelatorValue,
    Method,
    PointQuad,
    cylinder_two_point_direct,
    cylinder_two_point_spectral,
)
from ..correlation.gff import gff_k_point, sigma_squared
from ..lab.lab import SixVertexLab
from ..montecarlo.geometry import Geometry, even_domain, torus
from ..montecarlo.montecarlo import (
    MCConfig,
    flip_domination_test,
    height_product,
    sample_observable,
)
from ..montecarlo.percolation import (
    AlternatingMode,
    Annulus,
    Rectangle,
    arm_frequency,
    count_alternating,
    square_circuit,
)
from ..montecarlo.spins import sample_spin_config
from ..montecarlo.tree import build_level_line_tree
from ..spectral.spectral import class_m_report, rescale_and_concentrate
from ..transfer.observables import ChainEvaluator
from ..transfer.params import ModelParams
from ..transfer.transfer import free_energy_per_site
from ..utils.errors import ConfigError, SixVertexLabError
from ..utils.limits import Limits
from ..utils.logger import get_logger, setup_logger
from ..wienerhopf.wienerhopf import (
    FMethod,
    T_closed_form,
    convergence_study,
    f_second_derivative,
    factorization_residual,
    solve_neumann,
)
from .config import COMMANDS, GEOMETRIES, LIST_KEYS, SCALAR_KEYS, RunConfig, load_config_file, parse_value
from .output import ResultWriter
from .verify import AcceptanceSuite

# Horizontally ordered quads evaluated by ``correlate`` and ``gff``
DEFAULT_QUADS = (
    ((0, 0), (1, 0), (2, 0), (3, 0)),
    ((0, 0), (1, 0), (1, 1), (2, 1)),
    ((0, 0), (2, 0), (2, 1), (4, 1)),
    ((0, 0), (1, 1), (3, 1), (4, 0)),
)
STUDY_HS = (0.04, 0.02, 0.01)
STUDY_XS = (20.0, 30.0, 40.0)
MC_DEFAULT_SWEEPS = 10_000
TREE_SAMPLES = 100


class SixVLabCLI:
    """Command-line interface for sixvlab."""

    def __init__(self):
        self.logger = get_logger("sixvlab.cli")
        self.lab: SixVertexLab | None = None
        self.writer: ResultWriter | None = None

    def run(self, config: RunConfig) -> int:
        """
        Run one command and write its result files plus ``manifest.json``.

        Returns:
            Exit status: 0 on success, 1 on a usage error, 2 when a numerical
            check or acceptance threshold fails
        """
        self.lab = SixVertexLab(cache_dir=config.cache_dir, workers=config.workers)
        self.writer = ResultWriter(config.out)
        status = 1
        try:
            if config.command == "spectrum":
                status = self.spectrum(config)
            elif config.command == "measure":
                status = self.measure(config)
            elif config.command == "correlate":
                status = self.correlate(config)
            elif config.command == "gff":
                status = self.gff(config)
            elif config.command == "wh":
                status = self.wh(config)
            elif config.command == "wh-study":
                status = self.wh_study(config)
            elif config.command == "mc":
                status = self.mc(config)
            elif config.command == "verify":
                status = self.verify(config)
            else:
                print(f"Unknown command: {config.command}", file=sys.stderr)
        except ValueError as e:
            print(f"Error: {e}", file=sys.stderr)
            status = 1
        except SixVertexLabError as e:
            self.logger.error(f"{config.command} failed: {e}")
            print(f"Error: {e}", file=sys.stderr)
            status = 2
        finally:
            self.writer.write_manifest(config.to_dict(), status)
            self.lab.close()
        return status

    def _points(self, config: RunConfig):
        for L in config.L:
            for c in config.c:
                yield L, c

    def _prefetch(self, config: RunConfig) -> None:
        failed = self.lab.prefetch(config.L, config.c)
        if failed:
            self.logger.warning(f"Prefetch failed for {failed}; retrying serially")

    def spectrum(self, config: RunConfig) -> int:
        self._prefetch(config)
        summary, eigen = [], []
        for L, c in self._points(config):
            system = self.lab.system(L, c)
            rest = np.sort(np.abs(system.Lambda))[::-1][1:]
            summary.append(
                {
                    "L": L,
                    "c": c,
                    "n_states": system.n,
                    "lam0": system.lam0,
                    "free_energy": free_energy_per_site(system),
                    "gap": 1.0 - float(rest[0]) if len(rest) else math.nan,
                    "completeness_error": system.completeness_error(),
                }
            )
            for k, (lam, p) in enumerate(zip(system.Lambda, system.momenta, strict=True)):
                eigen.append({"L": L, "c": c, "k": k, "Lambda": float(lam), "momentum": float(p)})

        self.writer.write_csv("spectrum.csv", summary)
        self.writer.write_csv("eigenvalues.csv", eigen)
        _print_rows("Transfer matrix spectra", summary, ("L", "c", "n_states", "lam0", "gap"))
        return 0

    def measure(self, config: RunConfig) -> int:
        self._prefetch(config)
        atoms, class_m, concentration = [], {}, {}
        for L, c in self._points(config):
            measure = self.lab.measure(L, c)
            atoms.extend(measure.to_rows())
            key = f"L={L},c={c:.12g}"
            class_m[key] = class_m_report(measure).to_dict()
            concentration[key] = rescale_and_concentrate(measure, delta=4.0 / L, eps=0.2).to_dict()
            print(f"L={L} c={c:.6g}: {len(measure)} atoms, total mass {measure.total_mass:.12g}")

        self.writer.write_csv("measure_atoms.csv", atoms)
        self.writer.write_json("class_m.json", class_m)
        self.writer.write_json("concentration.json", concentration)
        return 0

    def correlate(self, config: RunConfig) -> int:
        self._prefetch(config)
        rows = []
        for L, c in self._points(config):
            system = self.lab.system(L, c)
            measure = self.lab.measure(L, c)
            evaluator = ChainEvaluator(system)
            torus_ok = L <= Limits.MAX_TORUS_L and config.M * L <= Limits.MAX_TORUS_SITES
            if not torus_ok:
                self.logger.info(f"Skipping brute force on the {config.M}x{L} torus (above caps)")
            for points in DEFAULT_QUADS:
                quad = PointQuad.of(*points)
                values = [
                    CorrelatorValue(cylinder_two_point_spectral(measure, quad), Method.SPECTRAL, quad, L, c),
                    CorrelatorValue(
                        cylinder_two_point_direct(system, quad, evaluator=evaluator), Method.DIRECT, quad, L, c
                    ),
                ]
                if torus_ok and max(p[0] for p in quad.points) < config.M:
                    brute = torus_brute_force(config.M, L, ModelParams(c), quad.face_pairs())
                    values.append(CorrelatorValue(brute, Method.BRUTE, quad, L, c))
                for value in values:
                    row = value.to_row()
                    row["M"] = config.M if value.method is Method.BRUTE else None
                    rows.append(row)

        self.writer.write_csv("correlators.csv", rows)
        _print_rows("Two-point correlators", rows, ("method", "L", "c", "value"))
        return 0

    def gff(self, config: RunConfig) -> int:
        sigma_rows, rows = [], []
        for c in config.c:
            params = ModelParams(c)
            s2 = sigma_squared(params)
            sigma_rows.append(
                {"c": c, "delta": params.delta, "zeta": params.zeta, "sigma2": s2, "sigma2_pi": s2 * math.pi}
            )
            for points in DEFAULT_QUADS:
                quad = PointQuad.of(*points)
                rows.append(CorrelatorValue(gff_k_point(quad, s2), Method.GFF, quad, None, c).to_row())

        self.writer.write_csv("gff_sigma.csv", sigma_rows)
        self.writer.write_csv("gff.csv", rows)
        _print_rows("GFF variance", sigma_rows, ("c", "delta", "sigma2"))
        return 0

    def wh(self, config: RunConfig) -> int:
        t = np.linspace(-20.0, 20.0, 401)
        rows = []
        for zeta in config.zeta:
            params = config.wh_params(zeta)
            neumann = solve_neumann(params)
            closed = T_closed_form(params)
            rows.append(
                {
                    "zeta": zeta,
                    "c": params.c,
                    "h": params.h,
                    "X": params.X,
                    "T_max": params.T_max,
                    "I1": neumann.I1,
                    "I2": neumann.I2,
                    "ratio_neumann": neumann.ratio,
                    "ratio_closed": closed.ratio,
                    "ratio_expected": neumann.expected_ratio,
                    "f_second_neumann": neumann.f_second,
                    "f_second_rh": f_second_derivative(params, FMethod.RH),
                    "f_second_closed": f_second_derivative(params, FMethod.CLOSED),
                    "residual": neumann.residual,
                    "iterations": neumann.iterations,
                    "factorization_residual": factorization_residual(t, zeta),
                }
            )

        self.writer.write_csv("wiener_hopf.csv", rows)
        _print_rows("Wiener-Hopf", rows, ("zeta", "ratio_neumann", "ratio_expected", "f_second_neumann"))
        return 0

    def wh_study(self, config: RunConfig) -> int:
        hs = config.grid_h or list(STUDY_HS)
        Xs = config.cutoff_X or list(STUDY_XS)
        rows = convergence_study(config.zeta, hs, Xs, T_max=config.T_max, workers=config.workers)
        if not rows:
            raise ConfigError("No valid (ζ, h, X) combination in the study grid")
        self.writer.write_csv("wh_study.csv", rows)
        _print_rows("Wiener-Hopf convergence", rows, ("zeta", "h", "X", "ratio_error"))
        return 0

    def mc(self, config: RunConfig) -> int:
        geometry, quad, center = _mc_geometry(config)
        mc_config = MCConfig(
            sweeps=config.sweeps or MC_DEFAULT_SWEEPS,
            burn_in=config.burn_in,
            thin=config.thin,
            chains=config.chains,
            seed=config.seed,
            workers=config.workers,
        )
        for p in quad.points:
            if geometry.boundary_distance(p) < mc_config.margin:
                raise ConfigError(f"Point {p} is on the boundary of the {config.size}x{config.size} domain")
        keep = not geometry.is_torus

        samples, estimates, tree_rows, analyses = [], [], [], {}
        for c in config.c:
            params = ModelParams(c)
            name = f"height_product@c={c:.6g}"
            est = sample_observable(
                geometry, params, height_product(quad, geometry), mc_config, name=name, keep_fields=keep
            )
            samples.extend(est.sample_rows())
            correlator = CorrelatorValue(
                est.mean,
                Method.MC,
                quad,
                geometry.shape[1] if geometry.is_torus else None,
                c,
                est.stderr,
            )
            estimates.append({**est.to_dict(), "correlator": correlator.to_row()})
            print(f"c={c:.6g}: {est.mean:.6g} ± {est.stderr:.3g}")

            if not keep:
                continue
            if c < 1:
                self.logger.warning(f"Spin representation needs c >= 1; skipping tree analyses at c={c}")
                continue
            fields = est.fields()
            heights = np.array([hf[center] for hf in fields], dtype=float)
            rows, summary = _tree_analyses(geometry, params, fields, quad, center, config.seed)
            for row in rows:
                row["c"] = c
            tree_rows.extend(rows)
            summary["center_variance"] = float(heights.var()) if len(heights) else math.nan
            analyses[f"c={c:.12g}"] = summary

        self.writer.write_csv("mc_samples.csv", samples)
        self.writer.write_json("mc_estimates.json", estimates)
        if keep:
            self.writer.write_csv("mc_tree.csv", tree_rows)
            self.writer.write_json("mc_analyses.json", analyses)
        return 0

    def verify(self, config: RunConfig) -> int:
        suite = AcceptanceSuite(config, self.lab)
        suite.register_default_checks()
        results = suite.run(config.checks)
        print(suite.format_table(results))

        self.writer.write_csv("verify.csv", [r.to_row() for r in results])
        for r in results:
            if r.rows:
                self.writer.write_csv(f"verify_{r.name}.csv", r.rows)
        return suite.exit_status(results)


def _print_rows(title: str, rows: list[dict], columns: tuple[str, ...]) -> None:
    print(f"\n{title}:")
    print("-" * 50)
    for row in rows:
        cells = []
        for key in columns:
            value = row.get(key)
            cells.append(f"{key}={value:.10g}" if isinstance(value, float) else f"{key}={value}")
        print("  ".join(cells))


def _mc_geometry(config: RunConfig) -> tuple[Geometry, PointQuad, tuple[int, int]]:
    """Geometry, a centred collinear quad and the centre face of an ``mc`` run."""
    if config.geometry == "torus":
        L = config.L[0]
        if config.M < 4 or config.M % 2 or L % 2:
            raise ConfigError(f"mc on a torus needs even M >= 4 and even L, got {config.M}x{L}")
        quad = PointQuad.of((0, 0), (1, 0), (2, 0), (3, 0))
        return torus(config.M, L), quad, (0, 0)

    size = config.size
    if size < 8:
        raise ConfigError(f"mc on a domain needs size >= 8, got {size}")
    mid = size // 2
    s = max(1, size // 8)
    x0 = mid - (3 * s) // 2
    quad = PointQuad.of(*((x0 + i * s, mid) for i in range(4)))
    return even_domain(size, size), quad, (mid, mid)


def _tree_analyses(geometry, params, fields, quad, center, seed) -> tuple[list[dict], dict]:
    """Level-line trees, alternating counts and flip domination on kept fields."""
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, 1])))
    step = max(1, len(fields) // TREE_SAMPLES)
    chosen = fields[::step][:TREE_SAMPLES]
    u, v = (int(quad.points[0][0]), int(quad.points[0][1])), (int(quad.points[-1][0]), int(quad.points[-1][1]))

    size = geometry.shape[0] - 1
    mid = center[0]
    r = max(2, size // 4)
    rect = Rectangle(mid - r, mid - r, mid + r, mid + r)
    R = mid - 2
    annulus = Annulus(center, 1, R) if R - 1 >= 3 else None

    rows, arms = [], []
    for i, hf in enumerate(chosen):
        spin = sample_spin_config(hf, params, rng)
        tree = build_level_line_tree(spin)
        branching = tree.branching(u, v)
        row = {
            "sample": i,
            "n_odd": len(tree.odd_vertices),
            "n_even": len(tree.even_vertices),
            "depth": max(vx.depth for vx in tree.vertices),
            "psi": branching.psi,
            "psi_star_u": branching.psi_star_u,
            "psi_star_v": branching.psi_star_v,
            "conditional_covariance": branching.covariance,
            "hu_hv": int(hf[u]) * int(hf[v]),
            "hori": count_alternating(spin, rect, AlternatingMode.HORI),
            "verti": count_alternating(spin, rect, AlternatingMode.VERTI),
        }
        if annulus is not None:
            row["circuit"] = count_alternating(spin, annulus, AlternatingMode.CIRCUIT)
            row["arm"] = count_alternating(spin, annulus, AlternatingMode.ARM)
            arms.append(row["arm"])
        rows.append(row)

    summary = {
        "trees": len(rows),
        "mean_conditional_covariance": float(np.mean([r["conditional_covariance"] for r in rows])) if rows else math.nan,
        "mean_hu_hv": float(np.mean([r["hu_hv"] for r in rows])) if rows else math.nan,
        "arm_frequency": arm_frequency(arms),
        "flip_domination": flip_domination_test(fields, square_circuit(center, r), center, rng=rng).to_dict(),
    }
    return rows, summary


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="Flat key = value config file; flags override it")
    common.add_argument("--L", help="Cylinder circumferences, comma separated (even, <= 16)")
    common.add_argument("--c", help="Weights c, comma separated, in (0, 2]")
    common.add_argument("--zeta", help="Values of ζ in [0, 2π/3], comma separated")
    common.add_argument("--M", help="Torus columns")
    common.add_argument("--geometry", choices=GEOMETRIES, help="Monte Carlo geometry")
    common.add_argument("--size", help="Side of the square Monte Carlo domain (even)")
    common.add_argument("--sweeps", help="Recorded sweeps per chain")
    common.add_argument("--burn-in", help="Discarded sweeps per chain")
    common.add_argument("--thin", help="Sweeps between kept height fields")
    common.add_argument("--chains", help="Independent Markov chains")
    common.add_argument("--seed", help="Root seed")
    common.add_argument("--workers", help="Worker threads")
    common.add_argument("--out", help="Output directory (default $SIXVLAB_OUTPUT_DIR or ./sixvlab-out)")
    common.add_argument("--cache-dir", help="Directory of cached eigensystems")
    common.add_argument("--grid-h", help="Wiener-Hopf grid spacings, comma separated")
    common.add_argument("--cutoff-X", help="Wiener-Hopf cutoffs, comma separated")
    common.add_argument("--T-max", help="Fourier cutoff of the Wiener-Hopf kernel")
    common.add_argument("--tolerance", help="Neumann iteration tolerance")
    common.add_argument("--checks", help="Acceptance checks to run, comma separated")
    common.add_argument("--log-level", help="DEBUG, INFO, WARNING or ERROR")
    common.add_argument("--log-file", help="Also log to this file")

    parser = argparse.ArgumentParser(
        description="Six-vertex model lab: transfer matrices, spectral measures, Wiener-Hopf and Monte Carlo",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Run the acceptance suite
  sixvlab verify

  # Wiener-Hopf chain at five values of ζ
  sixvlab wh --zeta 0,0.5236,1.0472,1.5708,2.0944

  # Spectral measure of the L=2 cylinder
  sixvlab measure --L 2 --c 1.7321

  # Monte Carlo on a 32x32 domain
  sixvlab mc --size 32 --sweeps 20000 --seed 7
        """,
    )
    subparsers = parser.add_subparsers(dest="command", help="Available commands")
    helps = {
        "spectrum": "Transfer matrix eigenvalues and free energy",
        "measure": "Spectral measure atoms and reports",
        "correlate": "Two-point correlators by spectral, direct and brute-force evaluation",
        "gff": "Gaussian free field variance and k-point functions",
        "wh": "Wiener-Hopf solution and f''(0) at each ζ",
        "wh-study": "Convergence of the Wiener-Hopf solver over (ζ, h, X)",
        "mc": "Heat-bath Monte Carlo with tree and percolation analyses",
        "verify": "Run the acceptance suite",
    }
    for command in COMMANDS:
        subparsers.add_parser(command, parents=[common], help=helps[command])
    return parser


def _flag_values(args: argparse.Namespace) -> dict:
    values = {}
    for key in (*LIST_KEYS, *SCALAR_KEYS):
        raw = getattr(args, key, None)
        if raw is not None:
            values[key] = parse_value(key, raw)
    return values


def main(argv: list[str] | None = None) -> None:
    """Main CLI entry point."""
    parser = _build_parser()
    args = parser.parse_args(argv)

    if not args.command:
        parser.print_help()
        sys.exit(1)

    try:
        file_values = load_config_file(args.config) if args.config else {}
        config = RunConfig.from_sources(args.command, file_values, _flag_values(args))
    except (ConfigError, TypeError) as e:
        print(f"Error: {e}", file=sys.stderr)
        sys.exit(1)

    setup_logger("sixvlab", level=config.log_level.upper(), log_file=config.log_file)
    cli = SixVLabCLI()
    sys.exit(cli.run(config))


if __name__ == "__main__":
    main()
