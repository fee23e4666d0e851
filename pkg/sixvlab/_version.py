from importlib import metadata
from pathlib import Path

PYPROJECT = Path(__file__).resolve().parent.parent / "pyproject.toml"


def get_version() -> str:
    """Get the version of the package."""
    if PYPROJECT.exists():
        with open(PYPROJECT) as f:
            for line in f:
                if line.startswith("version = "):
                    return line.split(" = ")[1].strip().strip('"')
    try:
        return metadata.version("sixvlab")
    except metadata.PackageNotFoundError:
        return "0.0.0"
