"""
Run configuration for the sixvlab command line.

Values come from three layers, lowest first: dataclass defaults, a flat
``key = value`` config file, and command-line flags.
"""

import math
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from ..utils.errors import CapExceededError, ConfigError
from ..utils.limits import Limits
from ..utils.logger import get_logger
from ..wienerhopf.wienerhopf import WHParams

logger = get_logger("sixvlab.config")

OUTPUT_DIR_ENV = "SIXVLAB_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "sixvlab-out"

COMMANDS = ("spectrum", "measure", "correlate", "gff", "wh", "wh-study", "mc", "verify")
GEOMETRIES = ("domain", "torus")

ZETA_MAX = 2 * math.pi / 3 + 1e-12
DEFAULT_ZETAS = (0.0, math.pi / 6, math.pi / 3, math.pi / 2, 2 * math.pi / 3)

# Config keys holding comma separated lists, with their element type
LIST_KEYS = {"L": int, "c": float, "zeta": float, "grid_h": float, "cutoff_X": float, "checks": str}
SCALAR_KEYS = {
    "M": int,
    "geometry": str,
    "size": int,
    "sweeps": int,
    "burn_in": int,
    "thin": int,
    "chains": int,
    "seed": int,
    "workers": int,
    "out": Path,
    "cache_dir": Path,
    "T_max": float,
    "tolerance": float,
    "log_level": str,
    "log_file": Path,
}


def default_output_dir() -> Path:
    """``$SIXVLAB_OUTPUT_DIR``, or ./sixvlab-out."""
    return Path(os.environ.get(OUTPUT_DIR_ENV) or DEFAULT_OUTPUT_DIR)


def _canonical_key(key: str) -> str:
    key = key.strip().lstrip("-").replace("-", "_")
    for name in (*LIST_KEYS, *SCALAR_KEYS):
        if key == name or key.lower() == name.lower():
            return name
    raise ConfigError(f"Unknown configuration key: {key!r}")


def parse_value(key: str, raw: str):
    """
    Convert a raw string to the type of ``key``.

    Raises:
        ConfigError: If the value does not parse
    """
    key = _canonical_key(key)
    raw = raw.strip()
    try:
        if key in LIST_KEYS:
            kind = LIST_KEYS[key]
            items = [s.strip() for s in raw.split(",") if s.strip()]
            if not items:
                raise ValueError("empty list")
            return [kind(s) for s in items]
        kind = SCALAR_KEYS[key]
        return kind(raw)
    except ValueError as e:
        raise ConfigError(f"Invalid value for {key}: {raw!r} ({e})") from e


def load_config_file(path: str | Path) -> dict:
    """
    Read a flat ``key = value`` file; ``#`` starts a comment.

    Raises:
        ConfigError: If the file is missing or a line is malformed
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Config file not found: {path}")

    values = {}
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, raw = line.split("=", 1)
        try:
            values[_canonical_key(key)] = parse_value(key, raw)
        except ConfigError as e:
            raise ConfigError(f"{path}:{lineno}: {e}") from e
    logger.debug(f"Loaded {len(values)} keys from {path}")
    return values


@dataclass
class RunConfig:
    """
    Everything one CLI invocation needs.

    ``sweeps`` left unset means the per-command default: 10 000 for ``mc``
    and 10^6 in total for the exactness check of ``verify``.
    """

    command: str
    L: list[int] = field(default_factory=lambda: [4, 6, 8])
    c: list[float] = field(default_factory=lambda: [math.sqrt(3)])
    zeta: list[float] = field(default_factory=lambda: list(DEFAULT_ZETAS))
    M: int = 4
    geometry: str = "domain"
    size: int = 16
    sweeps: int | None = None
    burn_in: int | None = None
    thin: int = 10
    chains: int = 4
    seed: int = 0
    workers: int = 1
    out: Path = field(default_factory=default_output_dir)
    cache_dir: Path | None = None
    grid_h: list[float] | None = None
    cutoff_X: list[float] | None = None
    T_max: float | None = None
    tolerance: float = 1e-12
    checks: list[str] | None = None
    log_level: str = "INFO"
    log_file: Path | None = None

    @classmethod
    def from_sources(
        cls, command: str, file_values: dict | None = None, flag_values: dict | None = None
    ) -> "RunConfig":
        """
        Merge config-file values and flags; flags win. ``None`` flags are
        treated as unset.
        """
        merged = dict(file_values or {})
        for key, value in (flag_values or {}).items():
            if value is not None:
                merged[_canonical_key(key)] = value
        config = cls(command=command, **merged)
        config.validate()
        return config

    def validate(self) -> None:
        """
        Check every parameter against the module caps.

        Raises:
            ConfigError: On an unknown command or an out-of-range value
        """
        if self.command not in COMMANDS:
            raise ConfigError(f"Unknown command {self.command!r}; expected one of {COMMANDS}")
        if self.geometry not in GEOMETRIES:
            raise ConfigError(f"geometry must be one of {GEOMETRIES}, got {self.geometry!r}")
        try:
            self.L = [Limits.validate_L(L) for L in self.L]
        except (CapExceededError, ValueError) as e:
            raise ConfigError(str(e)) from e
        for c in self.c:
            if not 0 < c <= 2:
                raise ConfigError(f"c must lie in (0, 2], got {c}")
        for z in self.zeta:
            if not 0 <= z <= ZETA_MAX:
                raise ConfigError(f"ζ must lie in [0, 2π/3], got {z}")
        for name in ("grid_h", "cutoff_X"):
            for v in getattr(self, name) or ():
                if v <= 0:
                    raise ConfigError(f"{name} must be positive, got {v}")
        for name in ("M", "chains", "thin", "workers"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if self.size < 4 or self.size % 2:
            raise ConfigError(f"size must be an even integer >= 4, got {self.size}")
        if self.sweeps is not None and self.sweeps < 1:
            raise ConfigError(f"sweeps must be positive, got {self.sweeps}")
        if self.burn_in is not None and self.burn_in < 0:
            raise ConfigError(f"burn_in must be nonnegative, got {self.burn_in}")
        if self.tolerance <= 0:
            raise ConfigError(f"tolerance must be positive, got {self.tolerance}")
        self.out = Path(self.out)
        if self.out.exists() and not self.out.is_dir():
            raise ConfigError(f"Output path {self.out} exists and is not a directory")
        if self.out.exists() and not os.access(self.out, os.W_OK):
            raise ConfigError(f"Output directory {self.out} is not writable")

    def wh_params(self, zeta: float, h: float | None = None, X: float | None = None) -> WHParams:
        """
        Wiener-Hopf parameters at ζ. Grid spacing and cutoff default to the
        first configured value, then to the ``WHParams`` defaults; an unset
        T_max is capped at the Nyquist frequency π/h.
        """
        kwargs = {"tol": self.tolerance}
        h = h if h is not None else (self.grid_h[0] if self.grid_h else None)
        X = X if X is not None else (self.cutoff_X[0] if self.cutoff_X else None)
        if h is not None:
            kwargs["h"] = h
        if X is not None:
            kwargs["X"] = X
        if self.T_max is not None:
            kwargs["T_max"] = self.T_max
        elif h is not None:
            kwargs["T_max"] = min(200.0, math.pi / h)
        try:
            return WHParams(zeta=zeta, **kwargs)
        except ValueError as e:
            raise ConfigError(str(e)) from e

    def to_dict(self) -> dict:
        """Parameters as JSON-friendly values, for the run manifest."""
        data = asdict(self)
        for f in fields(self):
            if isinstance(data[f.name], Path):
                data[f.name] = str(data[f.name])
        return data
