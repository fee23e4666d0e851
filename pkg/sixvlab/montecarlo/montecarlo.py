"""
Monte Carlo estimators on top of the heat-bath sampler.

Chains run one per thread, each with its own counter-based Philox stream
spawned from a single SeedSequence, so a run is reproducible from one seed
and independent of the number of workers.
"""

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..correlation.correlation import CorrelatorValue, Method, PointQuad
from ..transfer.params import ModelParams
from ..utils.batch import GridRunner
from ..utils.logger import get_logger
from .geometry import Face, Geometry
from .sampler import (
    ExactHeightDistribution,
    HeatBathSampler,
    HeightField,
    exact_height_distribution,
)

logger = get_logger("sixvlab.montecarlo")

Observable = Callable[[HeightField], float]


@dataclass
class MCConfig:
    """
    Run configuration for Monte Carlo estimates.

    Attributes:
        sweeps: Recorded sweeps per chain, after burn-in
        burn_in: Discarded sweeps; None picks 10x the autocorrelation time
            measured on a pilot segment
        thin: Sweeps between recorded samples
        chains: Independent chains
        seed: Root seed of the SeedSequence
        workers: Worker threads
        n_batches: Batches per chain for batch-means errors
        margin: Minimal L∞ distance of observed faces to the boundary
    """

    sweeps: int = 10_000
    burn_in: int | None = None
    thin: int = 1
    chains: int = 4
    seed: int = 0
    workers: int = 1
    n_batches: int = 20
    margin: int = 1

    def __post_init__(self):
        if self.sweeps < 1 or self.thin < 1 or self.chains < 1 or self.n_batches < 2:
            raise ValueError(f"Invalid Monte Carlo configuration: {self}")
        if self.burn_in is not None and self.burn_in < 0:
            raise ValueError(f"burn_in must be nonnegative, got {self.burn_in}")

    @property
    def samples_per_chain(self) -> int:
        return self.sweeps // self.thin


@dataclass(frozen=True)
class BatchMeans:
    """Batch-means summary of a correlated series."""

    mean: float
    stderr: float
    tau: float
    n_samples: int
    batch_means: tuple[float, ...] = ()


def batch_means(series: np.ndarray, n_batches: int = 20) -> BatchMeans:
    """
    Mean, error bar and integrated autocorrelation time of a series.

    The series is cut into ``n_batches`` equal batches (a short tail is
    dropped). τ is estimated as b·Var(batch means) / (2·Var(x)).
    """
    x = np.asarray(series, dtype=np.float64)
    b = len(x) // n_batches
    if b < 1:
        return BatchMeans(float(x.mean()) if len(x) else math.nan, math.nan, math.nan, len(x))
    means = x[: b * n_batches].reshape(n_batches, b).mean(axis=1)
    return _summarize(means, b, float(x.var(ddof=1)) if len(x) > 1 else 0.0, len(x))


def _summarize(means: np.ndarray, batch_size: int, variance: float, n: int) -> BatchMeans:
    bvar = float(means.var(ddof=1)) if len(means) > 1 else 0.0
    tau = batch_size * bvar / (2 * variance) if variance > 0 else 0.5
    return BatchMeans(
        mean=float(means.mean()),
        stderr=math.sqrt(bvar / len(means)),
        tau=tau,
        n_samples=n,
        batch_means=tuple(means.tolist()),
    )


def merge_batch_means(parts: Sequence[BatchMeans], batch_size: int, variance: float) -> BatchMeans:
    """Pool the batches of several chains (associative)."""
    means = np.concatenate([np.asarray(p.batch_means) for p in parts])
    return _summarize(means, batch_size, variance, sum(p.n_samples for p in parts))


@dataclass
class ChainResult:
    """Output of one chain."""

    chain: int
    spawn_key: tuple[int, ...]
    burn_in: int
    thin: int
    series: np.ndarray
    final: HeightField
    fields: list[HeightField] = field(default_factory=list)

    def sample_rows(self, seed: int, name: str) -> list[dict]:
        """Rows (seed, chain, sweep, observable, value) for a sample log."""
        return [
            {
                "seed": seed,
                "chain": self.chain,
                "sweep": self.burn_in + (k + 1) * self.thin,
                "observable": name,
                "value": float(v),
            }
            for k, v in enumerate(self.series)
        ]


def run_chains(
    chain_fn: Callable[..., Any],
    config: MCConfig,
) -> list[Any]:
    """
    Run ``config.chains`` chains, one per thread.

    ``chain_fn(chain=i, rng=Generator)`` is called once per chain with a
    Philox generator spawned from ``SeedSequence(config.seed)``.

    Returns:
        Chain results in chain order
    """
    runner = GridRunner(max_workers=config.workers)
    for i, ss in enumerate(np.random.SeedSequence(config.seed).spawn(config.chains)):
        runner.add_task(
            f"chain-{i}",
            chain_fn,
            chain=i,
            rng=np.random.Generator(np.random.Philox(ss)),
            spawn_key=tuple(ss.spawn_key),
        )
    return [r.value for r in runner.execute(raise_on_error=True)]


def _chain(
    geometry: Geometry,
    params: ModelParams,
    observable: Observable,
    config: MCConfig,
    chain: int,
    rng: np.random.Generator,
    spawn_key: tuple[int, ...],
    keep_fields: bool = False,
) -> ChainResult:
    sampler = HeatBathSampler(geometry, params, rng)
    hf = HeightField.flat(geometry, seed=config.seed)

    if config.burn_in is None:
        pilot = max(100, config.sweeps // 10)
        series = np.empty(pilot)
        for k in range(pilot):
            sampler.sweep(hf)
            series[k] = observable(hf)
        tau = batch_means(series, min(config.n_batches, pilot // 5)).tau
        burn_in = max(pilot, math.ceil(10 * tau) if math.isfinite(tau) else pilot)
        sampler.sweep(hf, burn_in - pilot)
    else:
        burn_in = config.burn_in
        sampler.sweep(hf, burn_in)

    n = config.samples_per_chain
    values = np.empty(n)
    kept: list[HeightField] = []
    for k in range(n):
        sampler.sweep(hf, config.thin)
        values[k] = observable(hf)
        if keep_fields:
            kept.append(hf.copy())
    return ChainResult(chain, spawn_key, burn_in, config.thin, values, hf, kept)


@dataclass
class MCEstimate:
    """
    Pooled estimate of one observable.

    Attributes:
        name: Observable label
        summary: Batch-means mean, error and τ over all chains
        chains: Per-chain results
        seed: Root seed
    """

    name: str
    summary: BatchMeans
    chains: list[ChainResult]
    seed: int

    @property
    def mean(self) -> float:
        return self.summary.mean

    @property
    def stderr(self) -> float:
        return self.summary.stderr

    def fields(self) -> list[HeightField]:
        return [f for c in self.chains for f in c.fields]

    def to_dict(self) -> dict:
        return {
            "observable": self.name,
            "mean": self.summary.mean,
            "stderr": self.summary.stderr,
            "tau": self.summary.tau,
            "n_samples": self.summary.n_samples,
            "chains": len(self.chains),
            "burn_in": [c.burn_in for c in self.chains],
            "seed": self.seed,
        }

    def sample_rows(self) -> list[dict]:
        return [row for c in self.chains for row in c.sample_rows(self.seed, self.name)]


def sample_observable(
    geometry: Geometry,
    params: ModelParams,
    observable: Observable,
    config: MCConfig | None = None,
    name: str = "observable",
    keep_fields: bool = False,
) -> MCEstimate:
    """
    Estimate E[observable] with ``config.chains`` heat-bath chains.

    A run with fewer samples than batches per chain is reported with a NaN
    error bar rather than rejected.
    """
    config = config or MCConfig()

    def chain_fn(chain: int, rng: np.random.Generator, spawn_key: tuple[int, ...]):
        return _chain(geometry, params, observable, config, chain, rng, spawn_key, keep_fields)

    try:
        chains = run_chains(chain_fn, config)
    except Exception as e:
        logger.error(f"Monte Carlo run for {name} failed: {e}")
        raise

    n_batches = min(config.n_batches, config.samples_per_chain)
    if config.samples_per_chain < 2 * config.n_batches:
        logger.warning(
            f"{name}: {config.samples_per_chain} samples per chain is too few for "
            f"{config.n_batches} batches; error bar unavailable"
        )
    pooled = np.concatenate([c.series for c in chains])
    variance = float(pooled.var(ddof=1)) if len(pooled) > 1 else 0.0
    parts = [batch_means(c.series, n_batches) for c in chains]
    batch_size = config.samples_per_chain // n_batches
    summary = merge_batch_means(parts, batch_size, variance)
    if config.samples_per_chain < 2 * config.n_batches:
        summary = BatchMeans(summary.mean, math.nan, math.nan, summary.n_samples)
    logger.info(
        f"{name}: {summary.mean:.6g} ± {summary.stderr:.3g} "
        f"(τ≈{summary.tau:.3g}, {summary.n_samples} samples, {len(chains)} chains)"
    )
    return MCEstimate(name=name, summary=summary, chains=chains, seed=config.seed)


def height_product(quad: PointQuad, geometry: Geometry) -> Observable:
    """The observable Π (h(u_i') - h(u_i)) for integer points of a quad."""
    idx = [(geometry.locate(u), geometry.locate(v)) for u, v in quad.face_pairs()]

    def observable(hf: HeightField) -> float:
        h = hf.heights
        return float(math.prod(int(h[j] - h[i]) for i, j in idx))

    return observable


def estimate_correlator(
    geometry: Geometry,
    params: ModelParams,
    quad: PointQuad,
    config: MCConfig | None = None,
) -> CorrelatorValue:
    """
    Monte Carlo estimate of E[Π (h(u_i') - h(u_i))].

    Raises:
        ValueError: If a point is not an integer face of the geometry or lies
            closer than ``config.margin`` to the boundary
    """
    config = config or MCConfig()
    if not quad.is_integer:
        raise ValueError("Monte Carlo correlators need integer face coordinates")
    for p in quad.points:
        face = (int(p[0]), int(p[1]))
        geometry.locate(face)
        if geometry.boundary_distance(face) < config.margin:
            raise ValueError(f"Point {face} is within {config.margin} of the boundary")

    est = sample_observable(geometry, params, height_product(quad, geometry), config, name="height_product")
    L = geometry.shape[1] if geometry.is_torus else None
    return CorrelatorValue(
        value=est.mean, method=Method.MC, quad=quad, L=L, c=params.c, stderr=est.stderr
    )


def empirical_marginal(fields: Sequence[HeightField], face: Face) -> dict[int, float]:
    values, counts = np.unique([hf[face] for hf in fields], return_counts=True)
    return {int(v): float(n) / len(fields) for v, n in zip(values, counts, strict=True)}


def sample_heights(
    geometry: Geometry, params: ModelParams, config: MCConfig | None = None
) -> np.ndarray:
    """
    Heights of every face after each recorded sweep.

    An unset ``burn_in`` discards max(100, sweeps // 10) sweeps.

    Returns:
        (chains, samples_per_chain, n_faces) int16 array
    """
    config = config or MCConfig()
    burn_in = config.burn_in if config.burn_in is not None else max(100, config.sweeps // 10)

    def chain_fn(chain: int, rng: np.random.Generator, spawn_key: tuple[int, ...]):
        sampler = HeatBathSampler(geometry, params, rng)
        hf = HeightField.flat(geometry, seed=config.seed)
        sampler.sweep(hf, burn_in)
        out = np.empty((config.samples_per_chain, geometry.n_faces), dtype=np.int16)
        for k in range(config.samples_per_chain):
            sampler.sweep(hf, config.thin)
            out[k] = hf.heights
        return out

    return np.stack(run_chains(chain_fn, config))


def compare_histograms(
    geometry: Geometry,
    exact: ExactHeightDistribution,
    heights: np.ndarray,
    n_batches: int = 20,
    n_sigma: float = 3.0,
) -> list[dict]:
    """
    Compare sampled face heights with an exact distribution, cell by cell.

    Each row holds the exact and sampled probability of one (face, height)
    cell, signed heights kept apart, and whether they agree within
    ``n_sigma`` batch-means standard errors.

    Args:
        geometry: Domain the heights live on
        exact: Exhaustive distribution on the same domain
        heights: (chains, samples_per_chain, n_faces) array from ``sample_heights``
        n_batches: Batches per chain for the standard errors
        n_sigma: Tolerance in standard errors

    Returns:
        One dict per (face, height) cell
    """
    samples_per_chain = heights.shape[1]
    n_batches = min(n_batches, samples_per_chain)
    batch_size = samples_per_chain // n_batches

    rows = []
    for i in geometry.free_faces.tolist():
        face = tuple(int(v) for v in geometry.faces[i])
        marginal = exact.marginal(face)
        observed = {int(v) for v in np.unique(heights[:, :, i])}
        for value in sorted(set(marginal) | observed):
            p = marginal.get(value, 0.0)
            series = (heights[:, :, i] == value).astype(np.float64)
            parts = [batch_means(s, n_batches) for s in series]
            variance = float(series.var(ddof=1)) if series.size > 1 else 0.0
            summary = merge_batch_means(parts, batch_size, variance)
            err = abs(summary.mean - p)
            rows.append(
                {
                    "x": face[0],
                    "y": face[1],
                    "height": value,
                    "exact": p,
                    "estimate": summary.mean,
                    "stderr": summary.stderr,
                    "ok": bool(err <= n_sigma * summary.stderr + 1e-12),
                }
            )
    bad = sum(not r["ok"] for r in rows)
    if bad:
        logger.warning(f"Histogram check: {bad} of {len(rows)} cells outside {n_sigma}σ")
    else:
        logger.info(f"Histogram check: all {len(rows)} cells within {n_sigma}σ")
    return rows


def histogram_check(
    geometry: Geometry,
    params: ModelParams,
    config: MCConfig | None = None,
    n_sigma: float = 3.0,
) -> list[dict]:
    """
    Sample the heat bath and compare every face histogram with enumeration.

    Raises:
        CapExceededError: If the domain is too large to enumerate
    """
    config = config or MCConfig()
    exact = exact_height_distribution(geometry, params)
    heights = sample_heights(geometry, params, config)
    return compare_histograms(geometry, exact, heights, config.n_batches, n_sigma)


@dataclass(frozen=True)
class FlipDominationReport:
    """
    One-sided comparison of (h - m) and (m - h) at an interior face.

    Attributes:
        n_samples: Samples offered
        n_used: Samples inside the conditioning event
        violation: max_t P(h - m > t) - P(m - h > t), clipped at 0
        strict_margin: max_t P(m - h > t) - P(h - m > t)
        p_value: Sign-flip permutation p-value of ``violation``
        inconclusive: Conditioning event too rare
    """

    n_samples: int
    n_used: int
    m_shift: int
    violation: float
    strict_margin: float
    p_value: float
    inconclusive: bool

    def to_dict(self) -> dict:
        return self.__dict__.copy()


def _violation(x: np.ndarray, grid: np.ndarray) -> tuple[float, float]:
    above_x = (x[:, None] > grid).mean(axis=0)
    above_y = (-x[:, None] > grid).mean(axis=0)
    diff = above_x - above_y
    return max(0.0, float(diff.max())), max(0.0, float((-diff).max()))


def flip_domination_test(
    samples: Sequence[HeightField],
    circuit: Sequence[Face],
    face: Face,
    event: Callable[[HeightField], bool] | None = None,
    m_shift: int = 0,
    n_permutations: int = 999,
    min_fraction: float = 0.05,
    min_samples: int = 30,
    rng: np.random.Generator | None = None,
) -> FlipDominationReport:
    """
    Check that h - m is stochastically dominated by m - h inside a circuit.

    m is the even ceiling of max_γ h (plus ``m_shift``), computed per sample.

    Args:
        samples: Height fields from the sampler
        circuit: Faces of the circuit γ
        face: Interior face where h is compared
        event: Conditioning event, measurable outside γ
        m_shift: Added to m
        n_permutations: Random sign flips for the p-value
        min_fraction: Minimal empirical mass of the event
        min_samples: Minimal number of samples inside the event
        rng: Generator for the permutations

    Returns:
        FlipDominationReport
    """
    face = tuple(face)
    if face in set(map(tuple, circuit)):
        raise ValueError(f"Face {face} lies on the circuit")
    rng = rng or np.random.Generator(np.random.Philox(0))
    used = [hf for hf in samples if event is None or event(hf)]
    n, k = len(samples), len(used)
    if k < min_samples or (n and k / n < min_fraction):
        logger.warning(f"Conditioning event too rare: {k} of {n} samples")
        return FlipDominationReport(n, k, m_shift, math.nan, math.nan, math.nan, True)

    x = np.empty(k)
    for s, hf in enumerate(used):
        top = max(hf[g] for g in circuit)
        m = 2 * math.ceil(top / 2) + m_shift
        x[s] = hf[face] - m
    grid = np.unique(np.concatenate([x, -x]))
    violation, margin = _violation(x, grid)

    exceed = 0
    for _ in range(n_permutations):
        flipped = x * np.where(rng.random(k) < 0.5, 1.0, -1.0)
        if _violation(flipped, grid)[0] >= violation:
            exceed += 1
    p_value = (1 + exceed) / (1 + n_permutations)
    logger.info(
        f"Flip domination at {face}: violation {violation:.4g} (p={p_value:.3g}), "
        f"margin {margin:.4g}, {k} samples"
    )
    return FlipDominationReport(n, k, m_shift, violation, margin, p_value, False)
