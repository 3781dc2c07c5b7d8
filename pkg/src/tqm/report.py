"""JSON run reports emitted by every CLI command."""

from __future__ import annotations

import hashlib
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field

from . import __version__


def _clean(x):
    # JSON has no NaN/inf; report them as strings
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if hasattr(x, "item") and callable(x.item):
        return _clean(x.item())
    return x


def file_entry(path) -> dict:
    with open(path, "rb") as fh:
        data = fh.read()
    return {"path": os.fspath(path), "bytes": len(data),
            "sha256": hashlib.sha256(data).hexdigest(),
            "rows": max(data.count(b"\n") - 1, 0)}


@dataclass
class RunReport:
    command: str
    config: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    outputs: list = field(default_factory=list)
    results: dict = field(default_factory=dict)
    error: str | None = None
    exit_code: int = 0
    started: float = field(default_factory=time.perf_counter)

    def add_check(self, name, value, tolerance, **detail):
        v = float(value)
        ok = math.isfinite(v) and abs(v) <= tolerance
        self.checks.append({"name": name, "value": v, "tolerance": tolerance,
                            "pass": ok, "detail": detail})
        return ok

    def add_output(self, path):
        self.outputs.append(file_entry(path))

    @property
    def all_passed(self) -> bool:
        return all(c["pass"] for c in self.checks)

    def to_dict(self) -> dict:
        return _clean({
            "tool": "tqm", "version": __version__, "command": self.command,
            "config": self.config, "checks": self.checks,
            "n_checks": len(self.checks),
            "n_failed": sum(1 for c in self.checks if not c["pass"]),
            "outputs": self.outputs, "results": self.results,
            "error": self.error, "exit_code": self.exit_code,
            "wall_time_s": time.perf_counter() - self.started,
        })

    def write(self, path=None):
        text = json.dumps(self.to_dict(), indent=2, allow_nan=False) + "\n"
        if path is None:
            sys.stdout.write(text)
        else:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
