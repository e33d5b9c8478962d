"""Run every preset in configs/ through the CLI and write artifacts to results/."""
import sys
import time
from pathlib import Path

from quenchqns.cli import main

ROOT = Path(__file__).resolve().parent.parent
JOBS = {
    "power_laws": "trace",
    "nmeas_thermal": "nmeas",
    "cutoff_crossover": "trace",
    "comb_reconstruct": "reconstruct",
    "thermometry_ohmic": "thermometry",
    "oracle_boson": "oracle",
    "coeffs_hahn": "coeffs",
}


def run(out_dir: Path, jobs: int) -> int:
    out_dir.mkdir(parents=True, exist_ok=True)
    worst = 0
    for name, cmd in JOBS.items():
        suffix = ".json" if cmd == "thermometry" else ".csv"
        t0 = time.perf_counter()
        code = main([cmd, "--config", str(ROOT / "configs" / f"{name}.json"),
                     "--out", str(out_dir / f"{name}{suffix}"), "--jobs", str(jobs)])
        print(f"{name:20s} {cmd:12s} exit={code} {time.perf_counter() - t0:6.1f}s")
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    jobs = int(sys.argv[1]) if len(sys.argv) > 1 else 4
    sys.exit(run(ROOT / "results", jobs))
