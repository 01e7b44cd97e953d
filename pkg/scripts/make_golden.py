"""Regenerate the golden CLI outputs under tests/golden/.

Run after a deliberate change to simulation output; commit the result.
"""

import hashlib
import json
import shutil
import tempfile
from pathlib import Path

from ctxqkd.cli import main

GOLDEN = Path(__file__).resolve().parents[1] / "tests" / "golden"
TIMESTAMP = "2000-01-01T00:00:00+00:00"
RUNS = {
    "simulate_seed1": ["simulate", "--rounds", "20000", "--seed", "1", "--resamples", "50"],
    "simulate_seed2": ["simulate", "--rounds", "20000", "--seed", "2", "--source", "coherent", "--mu", "0.2",
                       "--resamples", "50"],
}


def run(name: str, argv: list[str], out: Path) -> dict:
    target = out / name
    assert main(argv + ["--out", str(target), "--timestamp", TIMESTAMP]) == 0
    return {p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in sorted(target.iterdir())}


if __name__ == "__main__":
    GOLDEN.mkdir(exist_ok=True)
    digests = {}
    with tempfile.TemporaryDirectory() as tmp:
        for name, argv in RUNS.items():
            digests[name] = run(name, argv, Path(tmp))
            shutil.copy(Path(tmp) / name / "result.json", GOLDEN / f"{name}_result.json")
    (GOLDEN / "digests.json").write_text(json.dumps({"runs": RUNS, "digests": digests}, indent=2, sort_keys=True) + "\n")
    print(f"wrote {GOLDEN}")
