"""
CSV files with a one-line comment header.

Every file written by heisencalc starts with `# <kind> key=value ...`, followed
by a line of column names and the data rows. Files are written to a temporary
file next to the destination and moved into place, so a reader never sees a
partially written file.
"""
import csv
import io
import logging
import os
import tempfile
from pathlib import Path
from typing import TYPE_CHECKING, NamedTuple

from heisencalc.errors import ConfigError

if TYPE_CHECKING:
    from typing import Any, Dict, Iterable, List, Mapping, Sequence, Tuple, Union

    PathLike = Union[str, "os.PathLike[str]"]

logger = logging.getLogger(__name__)


class CsvDocument(NamedTuple):
    kind: str
    fields: "Dict[str, str]"
    columns: "List[str]"
    rows: "List[List[str]]"


def format_value(value: "Any") -> str:
    """
    Render a cell. Floats use 17 significant digits so they read back bit-exact.
    """
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def header_line(kind: str, fields: "Mapping[str, Any]") -> str:
    parts = [kind] + [f"{key}={format_value(value)}" for key, value in fields.items()]
    return "# " + " ".join(parts)


def parse_header(line: str) -> "Tuple[str, Dict[str, str]]":
    """
    Split a header line into its kind (all words before the first key=value)
    and its key=value fields.
    """
    if not line.startswith("#"):
        raise ConfigError(f"expected a '#' header line, got {line[:40]!r}")
    kind_words: "List[str]" = []
    fields: "Dict[str, str]" = {}
    for token in line[1:].split():
        if "=" in token:
            key, value = token.split("=", 1)
            fields[key] = value
        elif not fields:
            kind_words.append(token)
        else:
            raise ConfigError(f"malformed header token {token!r}")
    return " ".join(kind_words), fields


def render(
    kind: str,
    fields: "Mapping[str, Any]",
    columns: "Sequence[str]",
    rows: "Iterable[Sequence[Any]]",
) -> str:
    buffer = io.StringIO()
    buffer.write(header_line(kind, fields) + "\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_value(value) for value in row])
    return buffer.getvalue()


def atomic_write_text(path: "PathLike", text: str) -> Path:
    """
    Write text to path through a temporary file in the same directory.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="") as f:
            f.write(text)
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    logger.debug("Wrote %s", path)
    return path


def write_csv(
    path: "PathLike",
    kind: str,
    fields: "Mapping[str, Any]",
    columns: "Sequence[str]",
    rows: "Iterable[Sequence[Any]]",
) -> Path:
    return atomic_write_text(path, render(kind, fields, columns, rows))


def read_csv(path: "PathLike") -> CsvDocument:
    with open(path, newline="") as f:
        first = f.readline()
        kind, fields = parse_header(first.rstrip("\n"))
        reader = csv.reader(f)
        try:
            columns = next(reader)
        except StopIteration:
            raise ConfigError(f"{path} has a header but no column line") from None
        rows = [row for row in reader if row]
    return CsvDocument(kind, fields, columns, rows)
