"""Plain-text persistence: nested key-value records and delimited tables.

Record files hold one nested record each. Scalars are written as `key = value`
lines; nested records open with a `[dotted.path]` header naming their full
path from the root; lists of records use integer path components in file
order (`[debris.0]`, `[debris.1]`, ...). Floats are printed with 17
significant digits so parsing returns the identical value. Lines starting
with `#` and blank lines are ignored.

Tables are comma-delimited text with a fixed header row; floats use their
shortest exact representation.
"""

from __future__ import annotations

import csv
from typing import Any

import numpy as np


class ParseError(ValueError):
    """Malformed record or table text; carries the 1-based line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


def format_float(value: float) -> str:
    """17-significant-digit decimal form whose parse returns the same float."""
    text = format(float(value), ".17g")
    if not any(c in text for c in ".eE") and "inf" not in text and "nan" not in text:
        text += ".0"
    return text


def _format_scalar(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_float(float(value))
    if isinstance(value, str):
        if "\n" in value or value != value.strip():
            raise ValueError(f"string value not representable: {value!r}")
        return value
    raise ValueError(f"unsupported scalar type {type(value).__name__}")


def _parse_scalar(text: str) -> Any:
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    if text == "true":
        return True
    if text == "false":
        return False
    return text


def _emit(record: dict, path: str, lines: list[str]) -> None:
    nested: list[tuple[str, Any]] = []
    for key, value in record.items():
        if not isinstance(key, str) or not key or "." in key or "=" in key or key.strip() != key:
            raise ValueError(f"invalid record key {key!r}")
        if isinstance(value, dict):
            nested.append((key, value))
        elif isinstance(value, (list, tuple)):
            nested.append((key, list(value)))
        else:
            lines.append(f"{key} = {_format_scalar(value)}")
    for key, value in nested:
        sub_path = f"{path}.{key}" if path else key
        if isinstance(value, dict):
            lines.append(f"[{sub_path}]")
            _emit(value, sub_path, lines)
        else:
            for index, item in enumerate(value):
                if not isinstance(item, dict):
                    raise ValueError(f"list {sub_path!r} may only contain records")
                item_path = f"{sub_path}.{index}"
                lines.append(f"[{item_path}]")
                _emit(item, item_path, lines)


def dump_record(record: dict) -> str:
    """Serialize a nested record (dicts, lists of dicts, scalars) to text."""
    lines: list[str] = []
    _emit(record, "", lines)
    return "\n".join(lines) + "\n"


def _resolve_section(root: dict, path: str, line: int) -> dict:
    """Walk (creating as needed) to the record named by a dotted path."""
    current: Any = root
    components = path.split(".")
    for pos, comp in enumerate(components):
        if not comp:
            raise ParseError(f"empty component in section path [{path}]", line)
        next_is_index = pos + 1 < len(components) and components[pos + 1].isdigit()
        if comp.isdigit():
            if not isinstance(current, list):
                raise ParseError(f"index {comp!r} in [{path}] does not address a list", line)
            index = int(comp)
            if index == len(current):
                current.append([] if next_is_index else {})
            elif index > len(current):
                raise ParseError(f"list index {index} in [{path}] skips index {len(current)}", line)
            current = current[index]
        else:
            if not isinstance(current, dict):
                raise ParseError(f"component {comp!r} in [{path}] does not address a record", line)
            if comp not in current:
                current[comp] = [] if next_is_index else {}
            current = current[comp]
    if not isinstance(current, dict):
        raise ParseError(f"section [{path}] is not a record", line)
    return current


def parse_record(text: str) -> dict:
    """Parse record text back into nested dicts / lists / scalars.

    Raises:
        ParseError: on any malformed line, with its 1-based line number.
    """
    root: dict = {}
    current = root
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ParseError(f"unterminated section header {line!r}", line_no)
            current = _resolve_section(root, line[1:-1], line_no)
        elif "=" in line:
            key, _, value = line.partition("=")
            key = key.strip()
            if not key or "." in key:
                raise ParseError(f"invalid key {key!r}", line_no)
            if key in current:
                raise ParseError(f"duplicate key {key!r}", line_no)
            current[key] = _parse_scalar(value.strip())
        else:
            raise ParseError(f"expected 'key = value' or '[section]', got {line!r}", line_no)
    return root


def save_record(path, record: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dump_record(record))


def load_record(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_record(fh.read())


def _format_cell(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_table(path, header: list[str], rows) -> None:
    """Write a comma-delimited table with a fixed header row."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            if len(row) != len(header):
                raise ValueError(f"row has {len(row)} cells, header has {len(header)}")
            writer.writerow([_format_cell(cell) for cell in row])


def read_table(path) -> tuple[list[str], list[dict]]:
    """Read a comma-delimited table; cells parse as int, float, or string.

    Returns:
        (header, rows) where each row is a dict keyed by header name.

    Raises:
        ParseError: empty file or a row whose cell count mismatches the header.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty table file", 1) from None
        rows = []
        for line_no, cells in enumerate(reader, start=2):
            if not cells:
                continue
            if len(cells) != len(header):
                raise ParseError(
                    f"row has {len(cells)} cells, header has {len(header)}", line_no
                )
            rows.append({name: _parse_scalar(cell) for name, cell in zip(header, cells)})
    return header, rows
