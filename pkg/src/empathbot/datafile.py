"""Reader for the tab-separated section files that hold the affect tables and
the motion catalog.

Grammar (bit-exact, UTF-8):
  - A section starts at a line of the form ``[name]`` and runs until the next
    section header or end of file.
  - Every other non-blank line is one record: fields separated by single tabs.
  - Lines whose first non-whitespace character is ``#`` are comments.
  - Blank lines are ignored.  Records before the first section header are an
    error.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path


class FormatError(Exception):
    """Structurally malformed data file.  Carries the 1-based line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class TableError(Exception):
    """A well-formed row that violates a table invariant.  Names the row."""


@dataclass(frozen=True, slots=True)
class Row:
    line_no: int
    fields: tuple[str, ...]


def read_sections(path: str | Path) -> dict[str, list[Row]]:
    """Parse a section file into ``{section_name: [rows]}``.

    Section order and duplicate sections are preserved by concatenating rows.
    """
    sections: dict[str, list[Row]] = {}
    current: list[Row] | None = None
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise FormatError(0, f"cannot read {path}: {exc}") from exc
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\n")
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if stripped.startswith("[") and stripped.endswith("]"):
            name = stripped[1:-1].strip()
            if not name:
                raise FormatError(line_no, "empty section name")
            current = sections.setdefault(name, [])
            continue
        if current is None:
            raise FormatError(line_no, "record before any [section] header")
        current.append(Row(line_no, tuple(line.split("\t"))))
    return sections
