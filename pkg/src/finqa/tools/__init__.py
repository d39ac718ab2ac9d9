from .builtin import FixtureBackends, build_registry, default_fixtures
from .calculator import CalcError, calculator_eval, format_result
from .registry import ToolParam, ToolRegistry, ToolResult, ToolSpec

__all__ = [
    "FixtureBackends",
    "build_registry",
    "default_fixtures",
    "CalcError",
    "calculator_eval",
    "format_result",
    "ToolParam",
    "ToolRegistry",
    "ToolResult",
    "ToolSpec",
]
