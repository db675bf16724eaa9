"""Run replicated estimation experiments from config files.

    python3 scripts/run_experiments.py configs/contact_er100.cfg --workers 4
    python3 scripts/run_experiments.py            # every config in configs/
"""
import argparse
import time
from pathlib import Path

from ctmpfit.experiment import ExperimentConfig, run_experiment

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("configs", nargs="*", type=Path)
    ap.add_argument("--workers", type=int)
    args = ap.parse_args()

    for path in args.configs or sorted(CONFIG_DIR.glob("*.cfg")):
        cfg = ExperimentConfig.from_file(path)
        t0 = time.perf_counter()
        _, summary = run_experiment(cfg, workers=args.workers)
        print(f"== {path.name}: {cfg.replications} replications in {time.perf_counter() - t0:.0f}s -> {cfg.output}")
        print(f"{'length':>8} {'method':>6} {'param':>6} {'count':>5} {'mae':>9} {'smape':>7}")
        for s in summary:
            print(f"{s['length']:>8} {s['method']:>6} {s['parameter']:>6} {s['count']:>5} {s['mae']:9.4f} {s['smape']:7.2f}")


if __name__ == "__main__":
    main()
