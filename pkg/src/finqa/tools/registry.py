"""Tool registry: declared parameter schemas, validation, roster rendering."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Any, Callable


@dataclass(frozen=True)
class ToolParam:
    name: str
    type: str  # string | number | integer | enum
    required: bool = True
    values: tuple[str, ...] = ()  # enum members

    def check(self, value: Any) -> str | None:
        """Return an error message or None."""
        if self.type == "string" and not isinstance(value, str):
            return f"{self.name}: expected string"
        if self.type == "number" and not isinstance(value, (int, float)):
            return f"{self.name}: expected number"
        if self.type == "integer" and not (isinstance(value, int) and not isinstance(value, bool)):
            return f"{self.name}: expected integer"
        if self.type == "enum" and value not in self.values:
            return f"{self.name}: expected one of {list(self.values)}"
        return None


@dataclass(frozen=True)
class ToolSpec:
    name: str
    description: str
    params: tuple[ToolParam, ...] = ()

    def validate_args(self, args: dict) -> str | None:
        known = {p.name for p in self.params}
        for p in self.params:
            if p.required and p.name not in args:
                return f"missing required arg {p.name!r}"
            if p.name in args:
                err = p.check(args[p.name])
                if err:
                    return err
        extra = set(args) - known
        if extra:
            return f"unknown args {sorted(extra)}"
        return None


@dataclass
class ToolResult:
    tool_name: str
    args: dict
    ok: bool
    payload: Any = None
    error: str | None = None
    latency: float = 0.0

    def to_dict(self) -> dict:
        return {
            "tool_name": self.tool_name,
            "args": self.args,
            "ok": self.ok,
            "payload": self.payload,
            "error": self.error,
            "latency": round(self.latency, 6),
        }


class ToolRegistry:
    def __init__(self):
        self._specs: dict[str, ToolSpec] = {}
        self._impls: dict[str, Callable[..., Any]] = {}

    def register(self, spec: ToolSpec, impl: Callable[..., Any]) -> None:
        if not spec.description:
            raise ValueError(f"tool {spec.name!r} needs a description")
        if spec.name in self._specs:
            raise ValueError(f"duplicate tool name {spec.name!r}")
        self._specs[spec.name] = spec
        self._impls[spec.name] = impl

    def deregister(self, name: str) -> None:
        self._specs.pop(name, None)
        self._impls.pop(name, None)

    def list_tools(self) -> list[ToolSpec]:
        return [self._specs[n] for n in sorted(self._specs)]

    def __contains__(self, name: str) -> bool:
        return name in self._specs

    def roster_text(self) -> str:
        """Stable-order tool roster injected into the agent prompt."""
        lines = []
        for spec in self.list_tools():
            params = ", ".join(
                f"{p.name}: {p.type}{'' if p.required else '?'}"
                + (f"{list(p.values)}" if p.type == "enum" else "")
                for p in spec.params
            )
            lines.append(f"- {spec.name}({params}): {spec.description}")
        return "\n".join(lines)

    def invoke(self, name: str, args: dict) -> ToolResult:
        """Run one tool call. Failures come back as error results, never raise."""
        t0 = time.monotonic()
        if name not in self._specs:
            return ToolResult(name, args, ok=False, error=f"unknown tool {name!r}",
                              latency=time.monotonic() - t0)
        err = self._specs[name].validate_args(args)
        if err:
            return ToolResult(name, args, ok=False, error=f"invalid args: {err}",
                              latency=time.monotonic() - t0)
        try:
            payload = self._impls[name](**args)
            return ToolResult(name, args, ok=True, payload=payload,
                              latency=time.monotonic() - t0)
        except Exception as e:  # noqa: BLE001 - containment boundary
            return ToolResult(name, args, ok=False, error=str(e),
                              latency=time.monotonic() - t0)
