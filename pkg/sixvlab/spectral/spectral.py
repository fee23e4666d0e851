"""
Spectral measures of the cylinder two-point function and of general slab
observables, plus scaling and class-M diagnostics.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from ..transfer.observables import (
    DEFAULT_CONVENTION,
    ChainEvaluator,
    HeightConvention,
    Side,
    SlabObservable,
    slab_embedding,
)
from ..transfer.transfer import EigenSystem
from ..utils.errors import EigenSolverError, MethodDisagreementError
from ..utils.logger import get_logger

logger = get_logger("sixvlab.spectral")

MERGE_TOL = 1e-9


@dataclass(frozen=True)
class SpectralAtom:
    a: float
    b: float
    weight: float


@dataclass
class SpectralMeasure:
    """
    Finite atomic measure on (a, b) ∈ (0, 2] × (-π, π].

    Atoms are stored as parallel arrays; ``atoms`` gives the dataclass view.
    """

    L: int
    c: float
    a: np.ndarray = field(default_factory=lambda: np.zeros(0))
    b: np.ndarray = field(default_factory=lambda: np.zeros(0))
    weight: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __len__(self) -> int:
        return len(self.a)

    @property
    def atoms(self) -> list[SpectralAtom]:
        return [
            SpectralAtom(float(a), float(b), float(w))
            for a, b, w in zip(self.a, self.b, self.weight, strict=True)
        ]

    @property
    def total_mass(self) -> float:
        return float(self.weight.sum())

    def mass(self, mask: np.ndarray) -> float:
        return float(self.weight[mask].sum())

    def integrate(self, f) -> complex:
        """Σ_atoms weight · f(a, b), with f vectorized over atoms."""
        if len(self) == 0:
            return 0.0
        return np.sum(self.weight * f(self.a, self.b))

    def to_rows(self) -> list[dict]:
        return [
            {"L": self.L, "c": self.c, "a": a, "b": b, "weight": w}
            for a, b, w in zip(self.a, self.b, self.weight, strict=True)
        ]


def aggregate_atoms(
    a: np.ndarray,
    b: np.ndarray,
    weight: np.ndarray,
    tol: float = MERGE_TOL,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Merge atoms whose a and b both agree within ``tol``.

    Atoms are clustered on a first, then on b inside each a-cluster, and
    each cluster is placed at its first member.
    """
    if len(a) == 0:
        return a, b, weight
    order = np.argsort(a, kind="stable")
    a, b, weight = a[order], b[order], weight[order]
    out_a, out_b, out_w = [], [], []
    start = 0
    for i in range(1, len(a) + 1):
        if i < len(a) and a[i] - a[i - 1] < tol:
            continue
        block = slice(start, i)
        ba, bb, bw = a[block], b[block], weight[block]
        inner = np.argsort(bb, kind="stable")
        ba, bb, bw = ba[inner], bb[inner], bw[inner]
        s = 0
        for j in range(1, len(bb) + 1):
            if j < len(bb) and bb[j] - bb[j - 1] < tol:
                continue
            out_a.append(ba[s])
            out_b.append(bb[s])
            out_w.append(bw[s:j].sum())
            s = j
        start = i
    return np.array(out_a), np.array(out_b), np.array(out_w)


def symmetrize(
    a: np.ndarray, b: np.ndarray, weight: np.ndarray, tol: float = MERGE_TOL
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Replace μ by (μ + μ∘(b -> -b))/2. Atoms at b = π stay single.
    """
    at_pi = np.abs(b - np.pi) < tol
    a2 = np.concatenate([a[at_pi], a[~at_pi], a[~at_pi]])
    b2 = np.concatenate([np.full(at_pi.sum(), np.pi), b[~at_pi], -b[~at_pi]])
    w2 = np.concatenate([weight[at_pi], weight[~at_pi] / 2, weight[~at_pi] / 2])
    return aggregate_atoms(a2, b2, w2, tol)


def spectral_measure(system: EigenSystem, min_weight: float = 0.0) -> SpectralMeasure:
    """
    Two-point spectral measure of a cylinder.

    Each k > 0 contributes |v_k† S v_0|²/(1 - Λ_k)² at
    (1 - Λ_k, 2π m_k/L), where S = s_0/λ_0; atoms are aggregated and
    symmetrized in b.

    Args:
        system: EigenSystem of the cylinder
        min_weight: Atoms with weight at or below this are dropped

    Returns:
        SpectralMeasure

    Raises:
        EigenSolverError: If some Λ_k with k > 0 equals 1
    """
    S_v0 = system.operators.s0 @ system.v0 / system.lam0
    overlaps = system.vectors[:, 1:].conj().T @ S_v0
    a = 1.0 - system.Lambda[1:]
    if np.any(a <= 1e-12):
        raise EigenSolverError("Degenerate top eigenvalue: some Λ_k = 1 with k > 0")
    weight = np.abs(overlaps) ** 2 / a**2
    b = system.b[1:].astype(np.float64)

    keep = weight > min_weight
    a, b, weight = symmetrize(*aggregate_atoms(a[keep], b[keep], weight[keep]))
    logger.debug(
        f"μ_L for L={system.L}, c={system.params.c}: {len(a)} atoms, mass {weight.sum():.6g}"
    )
    return SpectralMeasure(L=system.L, c=system.params.c, a=a, b=b, weight=weight)


def rescale(measure: SpectralMeasure, delta: float) -> SpectralMeasure:
    """μ^{(δ)}(U) = μ(δU): atoms move to (a/δ, b/δ)."""
    if delta <= 0:
        raise ValueError(f"Scale δ must be positive, got {delta}")
    return SpectralMeasure(
        L=measure.L,
        c=measure.c,
        a=measure.a / delta,
        b=measure.b / delta,
        weight=measure.weight.copy(),
    )


@dataclass
class ConcentrationReport:
    """Cone mass fraction and binned a-marginal of a rescaled measure."""

    L: int
    delta: float
    eps: float
    window: tuple[float, float]
    window_mass: float
    cone_fraction: float
    bin_edges: list[float]
    density: list[float]
    target_density: list[float]
    rank_correlation: float
    empty: bool = False

    def to_dict(self) -> dict:
        return self.__dict__.copy()


def rescale_and_concentrate(
    measure: SpectralMeasure,
    delta: float,
    eps: float,
    bins: int = 8,
    window: tuple[float, float] = (0.5, 3.0),
    sigma2: float | None = None,
) -> ConcentrationReport:
    """
    Concentration of μ^{(δ)} on the diagonals |b| = a.

    Args:
        measure: Spectral measure
        delta: Rescaling factor δ
        eps: Cone width; the cone is |b| <= (1 + ε) a
        bins: Number of a-bins in the window
        window: a-window [lo, hi] after rescaling
        sigma2: Variance constant of the target density σ²/(2πa);
            computed from the measure's c when omitted

    Returns:
        ConcentrationReport; an empty window is flagged, not raised
    """
    if sigma2 is None:
        from ..correlation.gff import sigma_squared

        sigma2 = sigma_squared(measure.c)
    scaled = rescale(measure, delta)
    lo, hi = window
    in_window = (scaled.a >= lo) & (scaled.a <= hi)
    window_mass = scaled.mass(in_window)
    edges = np.linspace(lo, hi, bins + 1)
    mids = 0.5 * (edges[1:] + edges[:-1])
    target = sigma2 / (2 * np.pi * mids)

    if window_mass <= 0:
        logger.info(f"Empty a-window {window} at L={measure.L}, δ={delta}")
        return ConcentrationReport(
            L=measure.L,
            delta=delta,
            eps=eps,
            window=window,
            window_mass=0.0,
            cone_fraction=float("nan"),
            bin_edges=edges.tolist(),
            density=[0.0] * bins,
            target_density=target.tolist(),
            rank_correlation=float("nan"),
            empty=True,
        )

    if math.isinf(eps):
        cone = in_window
    else:
        cone = in_window & (np.abs(scaled.b) <= (1 + eps) * scaled.a)
    hist, _ = np.histogram(scaled.a[in_window], bins=edges, weights=scaled.weight[in_window])
    density = hist / np.diff(edges)
    if np.ptp(density) > 0:
        rho = float(stats.spearmanr(density, target).statistic)
    else:
        rho = float("nan")

    return ConcentrationReport(
        L=measure.L,
        delta=delta,
        eps=eps,
        window=window,
        window_mass=window_mass,
        cone_fraction=scaled.mass(cone) / window_mass,
        bin_edges=edges.tolist(),
        density=density.tolist(),
        target_density=target.tolist(),
        rank_correlation=rho,
    )


@dataclass
class ClassMReport:
    """
    Dyadic mass tables of a measure.

    ``family1`` rows are (α, ν[a ∈ (α, 2α]]); ``family2`` rows are
    (α, β, ν[(0, α] × |b| ∈ (β, 2β]], that mass / (α/β)^c_probe) for β >= α.
    """

    c_probe: float
    family1: list[tuple[float, float]] = field(default_factory=list)
    family2: list[tuple[float, float, float, float]] = field(default_factory=list)

    @property
    def sup_family1(self) -> float:
        return max((m for _, m in self.family1), default=0.0)

    @property
    def sup_family2(self) -> float:
        return max((r for *_, r in self.family2), default=0.0)

    def to_dict(self) -> dict:
        return {
            "c_probe": self.c_probe,
            "sup_family1": self.sup_family1,
            "sup_family2": self.sup_family2,
            "family1": self.family1,
            "family2": self.family2,
        }


def _dyadic_grid(smallest: float, largest: float) -> list[float]:
    k_lo = math.floor(math.log2(smallest)) - 1
    k_hi = math.ceil(math.log2(largest))
    return [2.0**k for k in range(k_lo, k_hi + 1)]


def class_m_report(measure: SpectralMeasure, c_probe: float = 0.5) -> ClassMReport:
    """
    Tabulate the two dyadic bound families over grids covering the support.

    Args:
        measure: Spectral (or rescaled) measure
        c_probe: Exponent used to normalize the second family

    Returns:
        ClassMReport (all zero for an empty measure)
    """
    report = ClassMReport(c_probe=c_probe)
    if len(measure) == 0 or measure.total_mass == 0:
        return report

    a, b, w = measure.a, np.abs(measure.b), measure.weight
    alphas = _dyadic_grid(max(a.min(), 1e-12), a.max())
    for alpha in alphas:
        report.family1.append((alpha, float(w[(a > alpha) & (a <= 2 * alpha)].sum())))

    b_pos = b[b > 0]
    if len(b_pos):
        betas = _dyadic_grid(b_pos.min(), b_pos.max())
        for alpha in alphas:
            small_a = a <= alpha
            for beta in betas:
                if beta < alpha:
                    continue
                m = float(w[small_a & (b > beta) & (b <= 2 * beta)].sum())
                report.family2.append((alpha, beta, m, m / (alpha / beta) ** c_probe))
    return report


@dataclass
class ComplexAtomMeasure:
    """
    Complex atomic measure μ_{X,Y} on a ∈ [0, 2).

    Attributes:
        L: Circumference
        a: Atom locations 1 - Λ_k
        weight: Complex weights (ℰ⁺(Y)·v_k)(v_k†ℰ⁻(X))
        norm_left: ‖ℰ⁻(X)‖ = E[X X†]^{1/2}
        norm_right: ‖ℰ⁺(Y)‖ = E[Y† Y]^{1/2}
    """

    L: int
    a: np.ndarray
    weight: np.ndarray
    norm_left: float
    norm_right: float
    moments_checked: dict[int, float] = field(default_factory=dict)

    def moment(self, k: int) -> complex:
        """Σ weight·(1 - a)^k = E[X·τ_k Y]."""
        return complex(np.sum(self.weight * (1.0 - self.a) ** k))

    @property
    def total_variation(self) -> float:
        return float(np.abs(self.weight).sum())

    @property
    def cauchy_schwarz_bound(self) -> float:
        return self.norm_left * self.norm_right

    @property
    def cauchy_schwarz_slack(self) -> float:
        return self.cauchy_schwarz_bound - self.total_variation


def observable_measure(
    X: SlabObservable,
    Y: SlabObservable,
    system: EigenSystem,
    convention: HeightConvention = DEFAULT_CONVENTION,
    check_moments: tuple[int, ...] = (0, 1, 2),
    tol: float = 1e-10,
) -> ComplexAtomMeasure:
    """
    Spectral measure of the pair (X, Y) under horizontal translation.

    Args:
        X: Observable on the left slab
        Y: Observable on the right slab
        system: EigenSystem of the cylinder
        convention: Height sign convention
        check_moments: Translations k at which Σ weight·(1-a)^k is compared
            against the direct chain value of E[X·τ_k Y]
        tol: Moment tolerance, relative to max(1, |value|)

    Returns:
        ComplexAtomMeasure

    Raises:
        ValueError: If X is not a left observable or Y not a right one
        MethodDisagreementError: If a checked moment deviates
    """
    if X.side is not Side.LEFT or Y.side is not Side.RIGHT:
        raise ValueError(
            f"Expected X on the left and Y on the right, got {X.side.value} and {Y.side.value}"
        )

    chain = ChainEvaluator(system)
    left = slab_embedding(X, system, convention, evaluator=chain)
    right = slab_embedding(Y, system, convention, evaluator=chain)

    V = system.vectors
    weight = (right @ V) * (V.conj().T @ left)
    a = 1.0 - system.Lambda

    order = np.argsort(a, kind="stable")
    a, weight = a[order], weight[order]
    groups = np.concatenate([[True], np.diff(a) >= MERGE_TOL])
    starts = np.flatnonzero(groups)
    a_agg = a[starts]
    w_agg = np.add.reduceat(weight, starts)

    measure = ComplexAtomMeasure(
        L=system.L,
        a=a_agg,
        weight=w_agg,
        norm_left=float(np.linalg.norm(left)),
        norm_right=float(np.linalg.norm(right)),
    )

    for k in check_moments:
        direct = chain.height_product(X.pairs + Y.translated(k), convention)
        spectral = measure.moment(k)
        err = abs(spectral - direct)
        measure.moments_checked[k] = err
        if err > tol * max(1.0, abs(direct)):
            msg = f"Moment k={k} mismatch: spectral {spectral}, direct {direct}"
            logger.error(msg)
            raise MethodDisagreementError(msg)
    return measure


def F_discrete(measure: SpectralMeasure, x: complex, y: float) -> complex:
    """
    F(x, y) = Σ_atoms weight · a · exp(-a x - i b y).

    Raises:
        ValueError: If Re x <= 0
    """
    if complex(x).real <= 0:
        raise ValueError(f"F requires Re x > 0, got x={x}")
    if len(measure) == 0:
        return 0j
    return complex(np.sum(measure.weight * measure.a * np.exp(-measure.a * x - 1j * measure.b * y)))


def F_bound_check(
    measure: SpectralMeasure, xs: np.ndarray, ys: np.ndarray
) -> float:
    """
    Largest value of |F(x, y)| - F(Re x, 0) over the sample grid; never
    positive up to rounding for a positive measure.
    """
    worst = -np.inf
    for x in np.atleast_1d(xs):
        bound = F_discrete(measure, complex(x).real, 0.0).real
        for y in np.atleast_1d(ys):
            worst = max(worst, abs(F_discrete(measure, x, y)) - bound)
    return float(worst)
