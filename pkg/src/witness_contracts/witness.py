"""Witness documents: data model, YAML reading/writing and structural schema checks.

A witness document is a YAML list holding one ``invariant_set`` entry whose
``content`` is a list of ``{invariant: {...}}`` mappings.  Format version
``2.0`` documents may only carry ``loop_invariant``/``location_invariant``
entries with ``c_expression`` values; version ``2.1`` adds
``function_contract`` entries and the ``acsl_expression`` format.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Any, Iterable

import yaml
from yaml.nodes import MappingNode, Node, ScalarNode, SequenceNode

from .diagnostics import Diagnostic, DiagnosticError, Severity, has_errors

__all__ = [
    "EntryKind",
    "ExprFormat",
    "Location",
    "Entry",
    "Metadata",
    "WitnessSet",
    "parse_witness",
    "read_witness",
    "serialize_witness",
    "schema_validate",
    "TRUE_CLAUSE",
]

TRUE_CLAUSE = "1"

VERSION_2_0 = "2.0"
VERSION_2_1 = "2.1"
KNOWN_VERSIONS = (VERSION_2_0, VERSION_2_1)

_INT_TAG = "tag:yaml.org,2002:int"
_BOOL_TAG = "tag:yaml.org,2002:bool"
_NULL_TAG = "tag:yaml.org,2002:null"


class EntryKind(str, enum.Enum):
    FUNCTION_CONTRACT = "function_contract"
    LOOP_INVARIANT = "loop_invariant"
    LOCATION_INVARIANT = "location_invariant"


class ExprFormat(str, enum.Enum):
    C_EXPRESSION = "c_expression"
    ACSL_EXPRESSION = "acsl_expression"


@dataclass(frozen=True)
class Location:
    file_name: str
    line: int
    column: int | None = None
    function: str | None = None


@dataclass(frozen=True)
class Entry:
    """One ``invariant`` mapping of the content list.

    Contracts keep ``requires``/``ensures`` exactly as written (``None`` when
    absent) so that serialization does not invent keys; use
    :attr:`requires_text` and :attr:`ensures_text` for the effective clause.
    """

    kind: EntryKind
    location: Location
    format: ExprFormat
    value: str | None = None
    requires: str | None = None
    ensures: str | None = None
    # position of the ``invariant`` mapping in the YAML text; not part of identity
    yaml_line: int = field(default=0, compare=False)

    @property
    def is_contract(self) -> bool:
        return self.kind is EntryKind.FUNCTION_CONTRACT

    @property
    def requires_text(self) -> str:
        return TRUE_CLAUSE if self.requires is None else self.requires

    @property
    def ensures_text(self) -> str:
        return TRUE_CLAUSE if self.ensures is None else self.ensures

    def clauses(self) -> list[tuple[str, str]]:
        """``(clause, text)`` pairs in evaluation order."""
        if self.is_contract:
            return [("requires", self.requires_text), ("ensures", self.ensures_text)]
        return [("invariant", self.value or "")]


@dataclass(frozen=True)
class Metadata:
    format_version: str = VERSION_2_1
    uuid: str | None = None
    creation_time: str | None = None
    producer: dict | None = None
    task: dict | None = None


@dataclass(frozen=True)
class WitnessSet:
    metadata: Metadata = field(default_factory=Metadata)
    entries: tuple[Entry, ...] = ()

    def with_entries(self, entries: Iterable[Entry]) -> "WitnessSet":
        return replace(self, entries=tuple(entries))


_TOP_KEYS = {"entry_type", "metadata", "content"}
_METADATA_KEYS = {"format_version", "uuid", "creation_time", "producer", "task"}
_PRODUCER_KEYS = {"name", "version", "configuration", "description", "command_line"}
_TASK_KEYS = {"input_files", "input_file_hashes", "specification", "data_model", "language"}
_LOCATION_KEYS = {"file_name", "line", "column", "function"}
_CONTRACT_KEYS = {"type", "location", "format", "requires", "ensures"}
_INVARIANT_KEYS = {"type", "location", "format", "value"}


class _Reader:
    """Walks the composed YAML node tree, building the model and collecting findings."""

    def __init__(self, strict: bool, source_name: str, column_base: int):
        self.strict = strict
        self.source_name = source_name
        self.column_base = column_base
        self.diags: list[Diagnostic] = []

    def report(self, node: Node | None, path: str, message: str, *, unknown: bool = False) -> None:
        severity = Severity.ERROR
        if unknown and not self.strict:
            severity = Severity.WARNING
        line = column = 0
        if node is not None:
            line = node.start_mark.line + 1
            column = node.start_mark.column + 1
        self.diags.append(
            Diagnostic("schema", severity, message, path, self.source_name, line, column)
        )

    def mapping(self, node: Node, path: str, allowed: set[str]) -> dict[str, tuple[Node, Node]] | None:
        if not isinstance(node, MappingNode):
            self.report(node, path, "expected a mapping")
            return None
        out: dict[str, tuple[Node, Node]] = {}
        for key_node, value_node in node.value:
            key = key_node.value if isinstance(key_node, ScalarNode) else None
            if key is None:
                self.report(key_node, path, "mapping keys must be scalars")
                continue
            if key in out:
                self.report(key_node, f"{path}.{key}", f"duplicate key: {key}")
                continue
            if key not in allowed:
                self.report(key_node, f"{path}.{key}", f"unknown key: {key}", unknown=True)
                continue
            out[key] = (key_node, value_node)
        return out

    def require(self, items: dict, node: Node, path: str, key: str) -> Node | None:
        if key not in items:
            self.report(node, path, f"missing key: {key}")
            return None
        return items[key][1]

    def scalar(self, node: Node | None, path: str) -> str | None:
        if node is None:
            return None
        if not isinstance(node, ScalarNode) or node.tag == _NULL_TAG and node.value in ("", "~", "null"):
            self.report(node, path, "expected a scalar")
            return None
        return node.value

    def integer(self, node: Node | None, path: str, minimum: int) -> int | None:
        if node is None:
            return None
        text = self.scalar(node, path)
        if text is None:
            return None
        try:
            value = int(text, 0) if node.tag == _INT_TAG else int(text)
        except ValueError:
            self.report(node, path, f"expected an integer, got {text!r}")
            return None
        if value < minimum:
            self.report(node, path, f"must be >= {minimum}, got {value}")
            return None
        return value

    def plain(self, node: Node) -> Any:
        if isinstance(node, ScalarNode):
            if node.tag == _INT_TAG:
                try:
                    return int(node.value, 0)
                except ValueError:
                    return node.value
            if node.tag == _BOOL_TAG:
                return node.value.lower() in ("true", "yes", "on")
            if node.tag == _NULL_TAG:
                return None
            return node.value
        if isinstance(node, SequenceNode):
            return [self.plain(n) for n in node.value]
        return {k.value: self.plain(v) for k, v in node.value}

    # -- document structure -------------------------------------------------

    def document(self, root: Node | None) -> WitnessSet | None:
        if not isinstance(root, SequenceNode):
            self.report(root, "", "witness document must be a list of entries")
            return None
        result: WitnessSet | None = None
        for i, item in enumerate(root.value):
            path = f"[{i}]"
            items = self.mapping(item, path, _TOP_KEYS)
            if items is None:
                continue
            kind_node = self.require(items, item, path, "entry_type")
            kind = self.scalar(kind_node, f"{path}.entry_type")
            if kind is None:
                continue
            if kind != "invariant_set":
                self.report(kind_node, f"{path}.entry_type", f"unsupported entry_type: {kind}", unknown=True)
                continue
            if result is not None:
                self.report(item, path, "more than one invariant_set entry")
                continue
            meta_node = self.require(items, item, path, "metadata")
            metadata = self.metadata(meta_node, f"{path}.metadata") if meta_node is not None else None
            content_node = self.require(items, item, path, "content")
            entries: list[Entry] = []
            if content_node is not None:
                entries = self.content(content_node, f"{path}.content", metadata)
            result = WitnessSet(metadata or Metadata(), tuple(entries))
        if result is None and not has_errors(self.diags):
            self.report(root, "", "document contains no invariant_set entry")
        return result

    def metadata(self, node: Node, path: str) -> Metadata | None:
        items = self.mapping(node, path, _METADATA_KEYS)
        if items is None:
            return None
        version_node = self.require(items, node, path, "format_version")
        version = self.scalar(version_node, f"{path}.format_version")
        if version is not None and version not in KNOWN_VERSIONS:
            self.report(
                version_node,
                f"{path}.format_version",
                f"invalid format_version {version!r}; allowed values: {', '.join(KNOWN_VERSIONS)}",
            )
        fields: dict[str, Any] = {"format_version": version or VERSION_2_1}
        for key in ("uuid", "creation_time"):
            if key in items:
                fields[key] = self.scalar(items[key][1], f"{path}.{key}")
        for key, allowed in (("producer", _PRODUCER_KEYS), ("task", _TASK_KEYS)):
            if key in items:
                sub = items[key][1]
                sub_items = self.mapping(sub, f"{path}.{key}", allowed)
                if sub_items is not None:
                    fields[key] = {k: self.plain(v) for k, (_, v) in sub_items.items()}
        return Metadata(**fields)

    def content(self, node: Node, path: str, metadata: Metadata | None) -> list[Entry]:
        if not isinstance(node, SequenceNode):
            self.report(node, path, "content must be a list")
            return []
        version = metadata.format_version if metadata else VERSION_2_1
        entries = []
        for i, item in enumerate(node.value):
            entry = self.entry(item, f"{path}[{i}]", version)
            if entry is not None:
                entries.append(entry)
        return entries

    def entry(self, node: Node, path: str, version: str) -> Entry | None:
        outer = self.mapping(node, path, {"invariant"})
        if outer is None:
            return None
        inner_node = self.require(outer, node, path, "invariant")
        if inner_node is None:
            return None
        path = f"{path}.invariant"
        if not isinstance(inner_node, MappingNode):
            self.report(inner_node, path, "expected a mapping")
            return None
        type_text = None
        for k, v in inner_node.value:
            if isinstance(k, ScalarNode) and k.value == "type":
                type_text = self.scalar(v, f"{path}.type")
                type_node = v
        if type_text is None:
            if not any(isinstance(k, ScalarNode) and k.value == "type" for k, _ in inner_node.value):
                self.report(inner_node, path, "missing key: type")
            return None
        try:
            kind = EntryKind(type_text)
        except ValueError:
            allowed = ", ".join(k.value for k in EntryKind)
            self.report(
                type_node, f"{path}.type",
                f"unknown entry type {type_text!r}; allowed values: {allowed}",
                unknown=True,
            )
            return None
        allowed_keys = _CONTRACT_KEYS if kind is EntryKind.FUNCTION_CONTRACT else _INVARIANT_KEYS
        items = self.mapping(inner_node, path, allowed_keys)
        if items is None:
            return None
        errors_before = sum(d.is_error for d in self.diags)

        if kind is EntryKind.FUNCTION_CONTRACT and version == VERSION_2_0:
            self.report(type_node, f"{path}.type", "function_contract requires format_version 2.1")

        loc_node = self.require(items, inner_node, path, "location")
        location = self.location(loc_node, f"{path}.location") if loc_node is not None else None

        fmt_node = self.require(items, inner_node, path, "format")
        fmt = None
        fmt_text = self.scalar(fmt_node, f"{path}.format")
        if fmt_text is not None:
            try:
                fmt = ExprFormat(fmt_text)
            except ValueError:
                self.report(
                    fmt_node, f"{path}.format",
                    f"invalid format {fmt_text!r}; allowed values: c_expression, acsl_expression",
                )
            else:
                if fmt is ExprFormat.ACSL_EXPRESSION and version == VERSION_2_0:
                    self.report(fmt_node, f"{path}.format", "acsl_expression requires format_version 2.1")

        payload: dict[str, str | None] = {}
        if kind is EntryKind.FUNCTION_CONTRACT:
            for key in ("requires", "ensures"):
                if key in items:
                    payload[key] = self.scalar(items[key][1], f"{path}.{key}")
        else:
            value_node = self.require(items, inner_node, path, "value")
            payload["value"] = self.scalar(value_node, f"{path}.value")

        if sum(d.is_error for d in self.diags) > errors_before or location is None or fmt is None:
            return None
        return Entry(kind, location, fmt, yaml_line=node.start_mark.line + 1, **payload)

    def location(self, node: Node, path: str) -> Location | None:
        items = self.mapping(node, path, _LOCATION_KEYS)
        if items is None:
            return None
        file_name = self.scalar(self.require(items, node, path, "file_name"), f"{path}.file_name")
        line = self.integer(self.require(items, node, path, "line"), f"{path}.line", 1)
        column = None
        if "column" in items:
            column = self.integer(items["column"][1], f"{path}.column", self.column_base)
        function = None
        if "function" in items:
            function = self.scalar(items["function"][1], f"{path}.function")
        if file_name is None or line is None:
            return None
        if "column" in items and column is None:
            return None
        return Location(file_name, line, column, function)


def read_witness(
    text: str, *, strict: bool = True, source_name: str = "", column_base: int = 1
) -> tuple[WitnessSet | None, list[Diagnostic]]:
    """Parse ``text`` and return the witness (``None`` on errors) with all findings."""
    reader = _Reader(strict, source_name, column_base)
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark else 0
        column = mark.column + 1 if mark else 0
        problem = getattr(exc, "problem", None) or str(exc)
        reader.diags.append(
            Diagnostic("schema", Severity.ERROR, f"malformed YAML: {problem}", "", source_name, line, column)
        )
        return None, reader.diags
    witness = reader.document(root)
    if has_errors(reader.diags):
        witness = None
    return witness, reader.diags


def parse_witness(
    text: str, *, strict: bool = True, source_name: str = "", column_base: int = 1
) -> WitnessSet:
    """Parse a witness document.

    Raises:
        DiagnosticError: if the document does not conform; in lenient mode
            unknown keys and entry types are only warnings and are skipped.
    """
    witness, diags = read_witness(text, strict=strict, source_name=source_name, column_base=column_base)
    if witness is None:
        raise DiagnosticError([d for d in diags if d.is_error])
    return witness


def schema_validate(text: str, *, source_name: str = "", column_base: int = 1) -> list[Diagnostic]:
    """All structural violations of ``text``; empty iff it conforms (strict mode)."""
    _, diags = read_witness(text, strict=True, source_name=source_name, column_base=column_base)
    return diags


def _location_dict(loc: Location) -> dict:
    out: dict[str, Any] = {"file_name": loc.file_name, "line": loc.line}
    if loc.column is not None:
        out["column"] = loc.column
    if loc.function is not None:
        out["function"] = loc.function
    return out


def _entry_dict(entry: Entry) -> dict:
    inner: dict[str, Any] = {"type": entry.kind.value, "location": _location_dict(entry.location)}
    if entry.is_contract:
        if entry.requires is not None:
            inner["requires"] = entry.requires
        if entry.ensures is not None:
            inner["ensures"] = entry.ensures
    else:
        inner["value"] = entry.value
    inner["format"] = entry.format.value
    return {"invariant": inner}


def serialize_witness(w: WitnessSet) -> str:
    meta: dict[str, Any] = {"format_version": w.metadata.format_version}
    for key in ("uuid", "creation_time", "producer", "task"):
        value = getattr(w.metadata, key)
        if value is not None:
            meta[key] = value
    doc = [
        {
            "entry_type": "invariant_set",
            "metadata": meta,
            "content": [_entry_dict(e) for e in w.entries],
        }
    ]
    return yaml.safe_dump(doc, sort_keys=False, default_flow_style=False, allow_unicode=True)
