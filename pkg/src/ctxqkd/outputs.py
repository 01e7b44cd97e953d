"""Run manifests and deterministic file writers.

Every file written by the command line carries the manifest of the run
that produced it: JSON files under a ``manifest`` key, CSV and key files
as a ``#``-prefixed JSON line at the top. Identical manifests give
byte-identical files.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

from . import __version__


def file_digest(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def resolve_timestamp(explicit: str | None = None) -> str:
    """Explicit value, else SOURCE_DATE_EPOCH, else the current UTC time."""
    if explicit:
        return explicit
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    when = datetime.fromtimestamp(int(epoch), timezone.utc) if epoch else datetime.now(timezone.utc)
    return when.replace(microsecond=0).isoformat()


def make_manifest(
    command: str,
    params: dict,
    seed: int | None = None,
    inputs: Iterable[str | Path] = (),
    timestamp: str | None = None,
) -> dict:
    return {
        "command": command,
        "params": params,
        "seed": seed,
        "version": __version__,
        "inputs": {str(p): file_digest(p) for p in inputs},
        "timestamp": resolve_timestamp(timestamp),
    }


def _jsonable(obj):
    if hasattr(obj, "tolist"):
        return obj.tolist()
    if hasattr(obj, "item"):
        return obj.item()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, default=_jsonable) + "\n"


def header_line(manifest: dict) -> str:
    return "# " + json.dumps(manifest, sort_keys=True, default=_jsonable) + "\n"


def write_json(path: Path, manifest: dict, result) -> Path:
    path.write_text(dumps({"manifest": manifest, "result": result}))
    return path


def write_csv(path: Path, manifest: dict, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    buf = io.StringIO()
    buf.write(header_line(manifest))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, float) else v for v in row])
    path.write_text(buf.getvalue())
    return path


def write_key(path: Path, manifest: dict, hex_bits: str, nbits: int) -> Path:
    path.write_text(header_line(manifest) + f"# bits={nbits}\n" + hex_bits + "\n")
    return path


def read_key(path: Path) -> tuple[str, int]:
    lines = Path(path).read_text().splitlines()
    nbits = int(next(ln for ln in lines if ln.startswith("# bits=")).split("=", 1)[1])
    return next(ln for ln in lines if not ln.startswith("#")), nbits
