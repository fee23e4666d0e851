"""
Row transfer matrix, vertical-arrow operators and the shift, together with
their joint eigenbasis.

Conventions. Column state κ holds the horizontal arrows between two
vertical lines; the vertical line in between carries arrows α_0..α_{L-1},
α_j sitting between rows j and j+1. At vertex j the left arrow is κ_j, the
right arrow κ'_j, the lower vertical arrow α_{j-1} and the upper α_j. The
ice rule reads κ_j + α_{j-1} = κ'_j + α_j and vertex j is of c-type iff
κ_j != κ'_j. Operator matrices are indexed ``M[κ', κ]``, so they map the
left state to the right state.
"""

from collections.abc import Iterable
from dataclasses import dataclass, field
from math import comb

import numpy as np
from scipy import linalg

from ..basis.basis import BasisIndex, ColumnConfig, enumerate_balanced, orbit_decomposition
from ..utils.batch import GridRunner
from ..utils.errors import EigenSolverError
from ..utils.limits import Limits
from ..utils.logger import get_logger
from .params import ModelParams

logger = get_logger("sixvlab.transfer")

# Largest int8 work array built per assembly block
_BLOCK_BYTES = 1 << 25


def _entries(
    left: np.ndarray,
    right: np.ndarray,
    c: float,
    positions: tuple[int, ...] | None = None,
) -> np.ndarray:
    """
    Sum over vertical arrows of c^{#c-vertices} (times Π_{j∈positions} α_j).

    Args:
        left: (n, L) ±1 signs of the left columns κ
        right: (B, L) ±1 signs of the right columns κ'
        c: Vertex weight
        positions: Rows of the vertical arrows in the product, or None for
            the plain transfer weight

    Returns:
        (B, n) array, entry [b, a] for the pair (left[a], right[b])
    """
    # α_j = α_{j-1} - (κ'_j - κ_j); with d = (κ' - κ)/2 the cumulative sum S
    # fixes α up to a global choice. A valid α exists iff max S - min S <= 1.
    d = (right[:, None, :].astype(np.int8) - left[None, :, :].astype(np.int8)) // 2
    S = np.cumsum(d, axis=2, dtype=np.int8)
    s_max = S.max(axis=2)
    s_min = S.min(axis=2)
    flips = np.count_nonzero(d, axis=2)
    valid = (s_max - s_min) <= 1
    weight = np.where(flips == 0, 2.0, np.power(float(c), flips)) * valid

    if positions is None:
        return weight

    positions = tuple(positions)
    # With flips the unique α has α_j = +1 exactly where S_j is minimal.
    if positions:
        picked = S[:, :, list(positions)] == s_min[:, :, None]
        sign = np.where(picked, 1, -1).prod(axis=2)
    else:
        sign = np.ones_like(flips)
    # Without flips both constant α contribute: (+1)^|P| + (-1)^|P|.
    no_flip_value = 2.0 if len(positions) % 2 == 0 else 0.0
    return np.where(flips == 0, no_flip_value, sign * weight)


def _check_same_L(kappa: ColumnConfig, kappa_prime: ColumnConfig) -> None:
    if kappa.L != kappa_prime.L:
        raise ValueError(
            f"Column configurations have different lengths: {kappa.L} != {kappa_prime.L}"
        )


def transfer_entry(
    kappa: ColumnConfig, kappa_prime: ColumnConfig, params: ModelParams
) -> float:
    """
    One-column partition function between two column states.

    Args:
        kappa: Left column
        kappa_prime: Right column
        params: Model parameters

    Returns:
        Σ over ice-rule-compatible vertical arrows of c^{#c-vertices}

    Raises:
        ValueError: If the columns have different lengths
    """
    _check_same_L(kappa, kappa_prime)
    value = _entries(kappa.signs()[None, :], kappa_prime.signs()[None, :], params.c)
    return float(value[0, 0])


def vertical_entry(
    kappa: ColumnConfig, kappa_prime: ColumnConfig, j: int, params: ModelParams
) -> float:
    """
    Like ``transfer_entry`` with each term weighted by the vertical arrow α_j.

    Raises:
        ValueError: If the columns have different lengths or j is out of range
    """
    _check_same_L(kappa, kappa_prime)
    if not 0 <= j < kappa.L:
        raise ValueError(f"Row index j={j} out of range for L={kappa.L}")
    value = _entries(
        kappa.signs()[None, :], kappa_prime.signs()[None, :], params.c, (j,)
    )
    return float(value[0, 0])


def _assemble(
    basis: BasisIndex,
    c: float,
    positions: tuple[int, ...] | None,
    workers: int = 1,
) -> np.ndarray:
    signs = basis.signs
    n, L = signs.shape
    block = max(1, _BLOCK_BYTES // max(1, n * L))
    starts = list(range(0, n, block))
    out = np.empty((n, n), dtype=np.float64)

    def fill(start: int) -> None:
        stop = min(start + block, n)
        out[start:stop] = _entries(signs, signs[start:stop], c, positions)

    if workers > 1 and len(starts) > 1:
        runner = GridRunner(max_workers=workers)
        for s in starts:
            runner.add_task(f"rows-{s}", fill, start=s)
        runner.execute(raise_on_error=True)
    else:
        for s in starts:
            fill(s)
    return out


def transfer_matrix(basis: BasisIndex, params: ModelParams, workers: int = 1) -> np.ndarray:
    """Dense t(π/2) on the balanced sector."""
    return _assemble(basis, params.c, None, workers)


def vertical_matrix(
    basis: BasisIndex,
    params: ModelParams,
    positions: Iterable[int] = (0,),
    workers: int = 1,
) -> np.ndarray:
    """
    Dense operator weighting each transfer term by Π_{j∈positions} α_j.

    ``positions=(j,)`` gives s_j(π/2); the empty set gives the transfer
    matrix itself.
    """
    positions = tuple(sorted({int(p) % basis.L for p in positions}))
    return _assemble(basis, params.c, positions, workers)


def shift_matrix(basis: BasisIndex) -> np.ndarray:
    """0/1 permutation matrix of the up-shift, ``T e_κ = e_{up(κ)}``."""
    n = len(basis)
    T = np.zeros((n, n), dtype=np.float64)
    T[basis.up_index, np.arange(n)] = 1.0
    return T


def apply_shift(basis: BasisIndex, v: np.ndarray, steps: int = 1) -> np.ndarray:
    """Apply T^steps to a vector or to the columns of a matrix."""
    out = np.asarray(v)
    up = basis.up_index
    for _ in range(steps % basis.L):
        shifted = np.empty_like(out)
        shifted[up] = out
        out = shifted
    return out


@dataclass
class TransferOperators:
    """
    Operators of one (L, c) pair. Vertical-arrow products on a single line
    are built on demand and cached by their row set.
    """

    basis: BasisIndex
    params: ModelParams
    t: np.ndarray
    s0: np.ndarray
    workers: int = 1
    _line_cache: dict[frozenset[int], np.ndarray] = field(default_factory=dict, repr=False)

    @property
    def L(self) -> int:
        return self.basis.L

    def vertical(self, j: int) -> np.ndarray:
        """
        s_j(π/2), obtained from s_0 by conjugation with the shift.
        """
        j %= self.L
        key = frozenset({j})
        if key not in self._line_cache:
            up = self.basis.up_index
            s = self.s0
            for _ in range(j):
                nxt = np.empty_like(s)
                nxt[np.ix_(up, up)] = s
                s = nxt
            self._line_cache[key] = s
        return self._line_cache[key]

    def line(self, rows: Iterable[int]) -> np.ndarray:
        """
        Operator of a vertical line carrying the product of the arrows in
        ``rows`` (each row counted once).
        """
        key = frozenset(int(r) % self.L for r in rows)
        if not key:
            return self.t
        if len(key) == 1:
            return self.vertical(next(iter(key)))
        if key not in self._line_cache:
            self._line_cache[key] = vertical_matrix(
                self.basis, self.params, key, self.workers
            )
        return self._line_cache[key]

    def diagonal(self, rows: Iterable[int]) -> np.ndarray:
        """Diagonal (as a vector) of the product of horizontal arrows κ_j, j ∈ rows."""
        rows = [int(r) % self.L for r in rows]
        if not rows:
            return np.ones(len(self.basis))
        return self.basis.signs[:, rows].prod(axis=1).astype(np.float64)

    def shift(self) -> np.ndarray:
        return shift_matrix(self.basis)


def build_operators(L: int, params: ModelParams, workers: int = 1) -> TransferOperators:
    """
    Build t(π/2) and s_0(π/2) for the balanced sector of width L.

    Raises:
        ValueError: If L is odd or too small
        CapExceededError: If L is above ``Limits.MAX_L``
    """
    basis = enumerate_balanced(L)
    logger.info(f"Assembling operators for L={L}, {params} ({len(basis)} states)")
    t = transfer_matrix(basis, params, workers)
    s0 = vertical_matrix(basis, params, (0,), workers)
    return TransferOperators(basis=basis, params=params, t=t, s0=s0, workers=workers)


@dataclass
class EigenSystem:
    """
    Joint orthonormal eigenbasis of t(π/2)/λ_0 and the shift.

    Attributes:
        L: Circumference
        params: Model parameters
        lam0: Top eigenvalue of t(π/2)
        Lambda: Eigenvalues of t(π/2)/λ_0; Lambda[0] = 1
        momenta: Integer m per vector; the shift eigenvalue is exp(2πi m/L)
        vectors: Eigenvectors as columns, v_0 real and positive
    """

    L: int
    params: ModelParams
    lam0: float
    Lambda: np.ndarray
    momenta: np.ndarray
    vectors: np.ndarray
    _operators: TransferOperators | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return len(self.Lambda)

    @property
    def basis(self) -> BasisIndex:
        return self.operators.basis

    @property
    def v0(self) -> np.ndarray:
        return self.vectors[:, 0].real

    @property
    def b(self) -> np.ndarray:
        """b_k = -i log Λ_k(0) in (-π, π]."""
        return 2.0 * np.pi * self.momenta / self.L

    @property
    def shift_eigenvalues(self) -> np.ndarray:
        return np.exp(1j * self.b)

    @property
    def operators(self) -> TransferOperators:
        if self._operators is None:
            self._operators = build_operators(self.L, self.params)
        return self._operators

    def propagator_power(self, power: int) -> np.ndarray:
        """(t/λ_0)^power through the eigendecomposition."""
        V = self.vectors
        return ((V * self.Lambda**power) @ V.conj().T).real

    def completeness_error(self) -> float:
        """max |Σ_k |v_k⟩⟨v_k| − 1| entrywise."""
        V = self.vectors
        return float(np.abs(V @ V.conj().T - np.eye(self.n)).max())


def _sector_vectors(members: list[tuple[int, ...]], m: int, L: int, n: int) -> np.ndarray:
    theta = 2.0 * np.pi * m / L
    cols = []
    for orbit in members:
        p = len(orbit)
        if (m * p) % L:
            continue
        u = np.zeros(n, dtype=np.complex128)
        u[list(orbit)] = np.exp(-1j * theta * np.arange(p)) / np.sqrt(p)
        cols.append(u)
    if not cols:
        return np.zeros((n, 0), dtype=np.complex128)
    return np.column_stack(cols)


def build_and_codiagonalize(
    L: int,
    params: ModelParams,
    tol: float = Limits.RESIDUAL_TOL,
    workers: int = 1,
    operators: TransferOperators | None = None,
) -> EigenSystem:
    """
    Co-diagonalize t(π/2) and the shift.

    The balanced space is split into momentum sectors spanned by Fourier
    vectors over shift orbits; t is diagonalized inside each sector, which
    gives a genuinely joint basis even when t has degenerate eigenvalues.

    Args:
        L: Even circumference within the cap
        params: Model parameters
        tol: Residual tolerance, relative to λ_0
        workers: Threads used for matrix assembly
        operators: Pre-built operators to reuse

    Returns:
        EigenSystem ordered with the Perron-Frobenius vector first, then by
        decreasing |Λ|

    Raises:
        EigenSolverError: On residuals above tolerance, a degenerate top
            eigenvalue or a top vector that is not positive
    """
    ops = operators or build_operators(L, params, workers)
    basis = ops.basis
    n = len(basis)
    orbits = orbit_decomposition(basis)
    members = [o.members for o in orbits.orbits]
    up = basis.up_index

    values, momenta, blocks = [], [], []
    for m in range(-L // 2 + 1, L // 2 + 1):
        U = _sector_vectors(members, m, L, n)
        if U.shape[1] == 0:
            continue
        tU = ops.t @ U
        H = U.conj().T @ tU
        H = 0.5 * (H + H.conj().T)
        w, Vs = linalg.eigh(H)
        vecs = U @ Vs

        scale = max(1.0, float(np.abs(w).max()))
        residual = np.linalg.norm(tU @ Vs - vecs * w, axis=0).max(initial=0.0)
        Tv = np.empty_like(vecs)
        Tv[up] = vecs
        shift_residual = np.linalg.norm(
            Tv - vecs * np.exp(2j * np.pi * m / L), axis=0
        ).max(initial=0.0)
        if residual > tol * scale or shift_residual > tol:
            msg = (
                f"Eigen residual too large in sector m={m}: "
                f"transfer {residual:.3e}, shift {shift_residual:.3e}"
            )
            logger.error(msg)
            raise EigenSolverError(msg)

        values.append(w)
        momenta.append(np.full(len(w), m, dtype=np.int64))
        blocks.append(vecs)
        logger.debug(f"L={L} sector m={m}: dim {len(w)}, top {w.max():.6g}")

    w = np.concatenate(values)
    m_all = np.concatenate(momenta)
    V = np.concatenate(blocks, axis=1)
    assert V.shape == (n, n) and n == comb(L, L // 2)

    zero = np.flatnonzero(m_all == 0)
    top = int(zero[np.argmax(w[zero])])
    lam0 = float(w[top])
    if lam0 <= 0:
        raise EigenSolverError(f"Top eigenvalue {lam0} is not positive")
    Lam = w / lam0

    rest = np.delete(np.arange(n), top)
    order = rest[np.lexsort((m_all[rest], -Lam[rest], -np.abs(Lam[rest])))]
    order = np.concatenate([[top], order])
    Lam, m_all, V = Lam[order], m_all[order], V[:, order]

    if np.any(np.abs(Lam[1:]) >= 1.0 - 1e-12):
        k = int(np.argmax(np.abs(Lam[1:]))) + 1
        msg = (
            f"Top eigenvalue is not simple in modulus: Λ_{k} = {Lam[k]:.15g} "
            f"(m={m_all[k]}) for L={L}, {params}"
        )
        logger.error(msg)
        raise EigenSolverError(msg)

    v0 = V[:, 0]
    pivot = v0[np.argmax(np.abs(v0))]
    v0 = v0 * (np.abs(pivot) / pivot)
    if np.abs(v0.imag).max() > tol or v0.real.min() <= 0:
        raise EigenSolverError("Top eigenvector is not strictly positive")
    V[:, 0] = v0.real

    logger.info(
        f"Co-diagonalized L={L}, {params}: λ0={lam0:.12g}, Λ1={Lam[1] if n > 1 else 0:.6g}"
    )
    return EigenSystem(
        L=L, params=params, lam0=lam0, Lambda=Lam, momenta=m_all, vectors=V, _operators=ops
    )


def free_energy_per_site(system: EigenSystem) -> float:
    """log(λ_0)/L, the free energy per vertex of the balanced cylinder."""
    return float(np.log(system.lam0) / system.L)
