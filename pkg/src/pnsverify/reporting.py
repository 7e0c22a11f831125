"""Deterministic CSV emission and the run manifest.

CSV cells use the shortest round-trip decimal for doubles (Python repr), a
fixed '\n' terminator and fixed column order, so identical configs produce
byte-identical files.  The manifest records the effective config, every
emitted file with its SHA-256, and pass/fail per check.
"""

import hashlib
import json
import os
from dataclasses import dataclass, field as dc_field
from datetime import datetime, timezone


def format_cell(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (int,)):
        return str(value)
    return str(value)


def write_csv(path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_cell(c) for c in row))
    data = ("\n".join(lines) + "\n").encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(data)
    return path


def sha256_of(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunManifest:
    """Record of one subcommand run: config, artifacts, check outcomes."""

    experiment: str
    subcommand: str
    version: str
    config: dict
    started: str = dc_field(
        default_factory=lambda: datetime.now(timezone.utc).isoformat()
    )
    finished: str = ""
    files: list = dc_field(default_factory=list)
    checks: list = dc_field(default_factory=list)

    def add_file(self, path, base_dir):
        self.files.append(
            {
                "path": os.path.relpath(path, base_dir),
                "sha256": sha256_of(path),
                "bytes": os.path.getsize(path),
            }
        )

    def add_check(self, name, passed, value=None, tolerance=None):
        entry = {"name": name, "passed": bool(passed)}
        if value is not None:
            entry["value"] = value
        if tolerance is not None:
            entry["tolerance"] = tolerance
        self.checks.append(entry)

    @property
    def all_passed(self):
        return all(c["passed"] for c in self.checks)

    def write(self, out_dir):
        self.finished = datetime.now(timezone.utc).isoformat()
        payload = {
            "experiment": self.experiment,
            "subcommand": self.subcommand,
            "version": self.version,
            "config": self.config,
            "started": self.started,
            "finished": self.finished,
            "files": self.files,
            "checks": self.checks,
            "all_passed": self.all_passed,
        }
        path = os.path.join(out_dir, "manifest.json")
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=False)
            fh.write("\n")
        return path
