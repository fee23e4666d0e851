from .config import RunConfig, load_config_file, parse_value
from .main import SixVLabCLI, main
from .output import ResultWriter, format_value
from .verify import AcceptanceSuite, CheckResult, CheckStatus, Severity

__all__ = [
    "main",
    "SixVLabCLI",
    "RunConfig",
    "load_config_file",
    "parse_value",
    "ResultWriter",
    "format_value",
    "AcceptanceSuite",
    "CheckResult",
    "CheckStatus",
    "Severity",
]
