"""Structured diagnostics shared by the schema checker, the linter and the front ends."""

from __future__ import annotations

import enum
import json
import os
from dataclasses import dataclass, field
from typing import Iterable


class Severity(str, enum.Enum):
    ERROR = "error"
    WARNING = "warning"


@dataclass(frozen=True, order=False)
class Diagnostic:
    """One finding, anchored either in the witness document or in the C source.

    ``path`` is a dotted path into the witness (``content[2].invariant.location``);
    ``line``/``column`` are 1-based positions in ``file`` when known.
    """

    rule: str
    severity: Severity
    message: str
    path: str = ""
    file: str = ""
    line: int = 0
    column: int = 0

    @property
    def is_error(self) -> bool:
        return self.severity is Severity.ERROR

    def sort_key(self) -> tuple:
        return (self.file, self.line, self.column, self.rule, self.path, self.message)

    def to_dict(self) -> dict:
        return {
            "rule": self.rule,
            "severity": self.severity.value,
            "message": self.message,
            "path": self.path,
            "file": self.file,
            "line": self.line,
            "column": self.column,
        }

    def format(self, color: bool = False) -> str:
        where = self.file or "<witness>"
        if self.line:
            where += f":{self.line}"
            if self.column:
                where += f":{self.column}"
        sev = self.severity.value
        if color:
            code = "31" if self.is_error else "33"
            sev = f"\x1b[{code}m{sev}\x1b[0m"
        tail = f" [{self.path}]" if self.path else ""
        return f"{where}: {sev}: {self.rule}: {self.message}{tail}"


@dataclass
class DiagnosticError(Exception):
    """Raised by operations whose result is either a value or a list of diagnostics."""

    diagnostics: list[Diagnostic] = field(default_factory=list)

    def __str__(self) -> str:
        return "; ".join(d.format() for d in self.diagnostics)


def sort_diagnostics(diags: Iterable[Diagnostic]) -> list[Diagnostic]:
    return sorted(diags, key=Diagnostic.sort_key)


def has_errors(diags: Iterable[Diagnostic]) -> bool:
    return any(d.is_error for d in diags)


def diagnostics_to_json(diags: Iterable[Diagnostic]) -> str:
    return json.dumps([d.to_dict() for d in diags], indent=2)


def color_enabled() -> bool:
    """ANSI color in text mode, controlled by ``WITNESS_CONTRACTS_COLOR``."""
    return os.environ.get("WITNESS_CONTRACTS_COLOR", "0") == "1"
