"""
Binary cache of EigenSystems.

Layout (little-endian):
    12 bytes   magic b"6VLAB-EIG-v1"
    uint32     L
    float64    c
    uint64     n
    float64    λ_0
    n float64  Λ_k(π/2)
    n int32    momenta m_k (shift eigenvalue exp(2πi m_k/L))
    n*n complex128  eigenvectors, row-major, column k is v_k
"""

from pathlib import Path

import numpy as np

from ..utils.errors import SixVertexLabError
from ..utils.logger import get_logger
from .params import ModelParams
from .transfer import EigenSystem, build_and_codiagonalize

MAGIC = b"6VLAB-EIG-v1"
HEADER = np.dtype([("L", "<u4"), ("c", "<f8"), ("n", "<u8"), ("lam0", "<f8")])


class CacheFormatError(SixVertexLabError):
    """A cache file is truncated or does not carry the expected header."""


def write_eigensystem(system: EigenSystem, path: str | Path) -> Path:
    """Serialize an EigenSystem."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = np.array([(system.L, system.params.c, system.n, system.lam0)], dtype=HEADER)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(header.tobytes())
        f.write(np.asarray(system.Lambda, dtype="<f8").tobytes())
        f.write(np.asarray(system.momenta, dtype="<i4").tobytes())
        f.write(np.ascontiguousarray(system.vectors, dtype="<c16").tobytes())
    return path


def read_eigensystem(path: str | Path) -> EigenSystem:
    """
    Deserialize an EigenSystem. Operators are rebuilt lazily on first use.

    Raises:
        CacheFormatError: If the magic string or the sizes do not match
    """
    data = Path(path).read_bytes()
    if not data.startswith(MAGIC):
        raise CacheFormatError(f"{path}: bad magic {data[: len(MAGIC)]!r}")
    offset = len(MAGIC)
    if len(data) < offset + HEADER.itemsize:
        raise CacheFormatError(f"{path}: truncated header")
    header = np.frombuffer(data, dtype=HEADER, count=1, offset=offset)[0]
    offset += HEADER.itemsize
    L, c, n, lam0 = int(header["L"]), float(header["c"]), int(header["n"]), float(header["lam0"])

    expected = offset + n * 8 + n * 4 + n * n * 16
    if len(data) != expected:
        raise CacheFormatError(f"{path}: expected {expected} bytes, found {len(data)}")
    Lambda = np.frombuffer(data, dtype="<f8", count=n, offset=offset).astype(np.float64)
    offset += n * 8
    momenta = np.frombuffer(data, dtype="<i4", count=n, offset=offset).astype(np.int64)
    offset += n * 4
    vectors = (
        np.frombuffer(data, dtype="<c16", count=n * n, offset=offset)
        .reshape(n, n)
        .astype(np.complex128)
    )
    return EigenSystem(
        L=L, params=ModelParams(c), lam0=lam0, Lambda=Lambda, momenta=momenta, vectors=vectors
    )


class EigenCache:
    """
    Directory of cached EigenSystems keyed by (L, c).
    """

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.logger = get_logger("sixvlab.cache")

    def path_for(self, L: int, c: float) -> Path:
        return self.directory / f"eig_L{L}_c{float(c).hex()}.6vl"

    def load(self, L: int, c: float) -> EigenSystem | None:
        path = self.path_for(L, c)
        if not path.exists():
            return None
        try:
            system = read_eigensystem(path)
        except CacheFormatError as e:
            self.logger.warning(f"Ignoring unreadable cache entry: {e}")
            return None
        self.logger.debug(f"Loaded EigenSystem L={L}, c={c} from {path}")
        return system

    def save(self, system: EigenSystem) -> Path:
        path = write_eigensystem(system, self.path_for(system.L, system.params.c))
        self.logger.debug(f"Saved EigenSystem to {path}")
        return path

    def get_or_build(self, L: int, params: ModelParams, workers: int = 1) -> EigenSystem:
        system = self.load(L, params.c)
        if system is None:
            system = build_and_codiagonalize(L, params, workers=workers)
            self.save(system)
        return system
