"""Structured run reports for the command line.

A report is a JSON document with the command name, its configuration
and the configuration's hash, a list of named verdicts, and optional
tables (also exportable as CSV sidecars).  With timestamps disabled the
whole wall-clock block is dropped, so identical configuration and seed
produce byte-identical output.
"""

import csv
import hashlib
import json
import numbers
import time
from datetime import datetime, timezone
from fractions import Fraction

import numpy as np

from .errors import ArgumentError

__all__ = ["config_hash", "jsonable", "RunReport", "write_csv"]


def jsonable(value):
    """Recursively coerce numerics, arrays and mappings to JSON types.

    Complex numbers become ``[re, im]`` pairs; fractions become their
    string form to stay exact.
    """
    if isinstance(value, (str, bool)) or value is None:
        return value
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, numbers.Integral):
        return int(value)
    if isinstance(value, numbers.Real):
        return float(value)
    if isinstance(value, numbers.Complex):
        return [float(value.real), float(value.imag)]
    if isinstance(value, np.ndarray):
        return jsonable(value.tolist())
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, set, frozenset)):
        seq = sorted(value) if isinstance(value, (set, frozenset)) else value
        return [jsonable(v) for v in seq]
    return str(value)


def config_hash(config):
    """SHA-256 hex digest of the canonical JSON form of a config dict."""
    blob = json.dumps(jsonable(config), sort_keys=True,
                      separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def write_csv(path, header, rows):
    """Write one table as CSV with a header row."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(header))
        for row in rows:
            writer.writerow([jsonable(cell) for cell in row])


class RunReport:
    """Accumulates verdicts and tables for one command invocation.

    Parameters
    ----------
    command : str
        Space-joined command path, e.g. ``"analyze ls"``.
    config : dict
        Everything that determines the run (flags, seed, problem path).
    no_timestamps : bool
        Drop the wall-clock block for byte-identical reruns.
    """

    def __init__(self, command, config, no_timestamps=False):
        self.command = str(command)
        self.config = jsonable(dict(config))
        self.no_timestamps = bool(no_timestamps)
        self.verdicts = []
        self.tables = {}
        self._started = time.time()
        self._started_utc = datetime.now(timezone.utc)

    def add_verdict(self, name, passed, **details):
        """Record one named pass/fail with free-form detail fields."""
        entry = {"name": str(name), "passed": bool(passed)}
        for key, value in sorted(details.items()):
            entry[key] = jsonable(value)
        self.verdicts.append(entry)
        return entry

    def add_table(self, name, header, rows):
        """Record one named table (list of header names, list of rows)."""
        if name in self.tables:
            raise ArgumentError("duplicate table name %r" % name)
        self.tables[name] = {
            "header": [str(h) for h in header],
            "rows": [[jsonable(cell) for cell in row] for row in rows],
        }

    @property
    def passed(self):
        """True when every recorded verdict passed (and one exists)."""
        return bool(self.verdicts) and all(v["passed"] for v in self.verdicts)

    @property
    def exit_code(self):
        """0 when all verdicts passed, 2 otherwise."""
        return 0 if self.passed else 2

    def to_dict(self):
        doc = {
            "command": self.command,
            "config": self.config,
            "config_hash": config_hash(self.config),
            "passed": self.passed,
            "verdicts": self.verdicts,
            "tables": self.tables,
        }
        if not self.no_timestamps:
            doc["wall_clock"] = {
                "started_utc": self._started_utc.isoformat(),
                "elapsed_seconds": round(time.time() - self._started, 3),
            }
        return doc

    def dumps(self):
        """Canonical JSON text of the report (sorted keys, newline end)."""
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def write(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.dumps())

    def write_tables(self, base_path):
        """Write each table as ``<base>.<table>.csv``; returns the paths."""
        paths = []
        for name, table in sorted(self.tables.items()):
            path = "%s.%s.csv" % (base_path, name)
            write_csv(path, table["header"], table["rows"])
            paths.append(path)
        return paths
