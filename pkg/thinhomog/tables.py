"""
CSV tables with a '#'-prefixed provenance block.
"""

import csv
from dataclasses import dataclass, field
from datetime import datetime, timezone
import io
import math
from threading import Lock

import numpy as np

from . import __version__

_LOCK = Lock()


def _cell(value):
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return "nan" if math.isnan(value) else repr(value)
    if isinstance(value, np.integer):
        return str(int(value))
    return str(value)


def _parse_cell(text):
    if text in ("true", "false"):
        return text == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


@dataclass
class CsvTable:
    """
    A rectangular table whose header is a module's declared schema.

    Parameters
    ----------
    columns : tuple of str
    rows : list of dict
        Keys must be exactly ``columns``.
    provenance : dict
        Written as ``# key: value`` lines above the header.

    """

    columns: tuple
    rows: list = field(default_factory=list)
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.columns = tuple(self.columns)
        for row in self.rows:
            self._check(row)

    def _check(self, row):
        if set(row) != set(self.columns):
            missing = set(self.columns) - set(row)
            extra = set(row) - set(self.columns)
            raise ValueError(
                f"Row does not match the schema (missing {sorted(missing)}, "
                f"extra {sorted(extra)})."
            )

    def __len__(self):
        return len(self.rows)

    def append(self, row):
        self._check(row)
        self.rows.append(dict(row))

    def column(self, name):
        return [row[name] for row in self.rows]

    def body(self):
        """Header and rows, without provenance; deterministic."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([_cell(row[c]) for c in self.columns])
        return buf.getvalue()

    def render(self, timestamp=None):
        if timestamp is None:
            timestamp = datetime.now(timezone.utc).isoformat(
                timespec="seconds"
            )
        meta = {"tool": f"thinhomog {__version__}", "timestamp": timestamp}
        meta.update(self.provenance)
        head = "".join(f"# {k}: {v}\n" for k, v in meta.items())
        return head + self.body()

    def write(self, path, timestamp=None):
        text = self.render(timestamp)
        with _LOCK:
            with open(path, "w", encoding="utf-8", newline="\n") as f:
                f.write(text)
        return path

    @classmethod
    def parse(cls, text):
        provenance, lines = {}, []
        for line in text.splitlines():
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition(":")
                provenance[key.strip()] = value.strip()
            elif line:
                lines.append(line)
        reader = csv.reader(lines)
        header = next(reader, None)
        if header is None:
            return cls((), [], provenance)
        rows = [
            {c: _parse_cell(v) for c, v in zip(header, values)}
            for values in reader
        ]
        return cls(tuple(header), rows, provenance)

    @classmethod
    def read(cls, path):
        with open(path, "r", encoding="utf-8") as f:
            return cls.parse(f.read())
