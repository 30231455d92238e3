"""Linear DM2L vs ridge on low-rank data, Gaussian vs linear DM2L on XOR data.

    python scripts/run_directional.py [--out-dir results]
"""

import argparse
import time
from dataclasses import replace
from pathlib import Path

from dm2l import experiments as ex

HERE = Path(__file__).parent / "configs"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", default="results")
    ap.add_argument("--repetitions", type=int)
    args = ap.parse_args()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, (better, worse) in {"directional_rank": ("dm2l-l", "ridge"),
                                  "directional_xor": ("dm2l-nl", "dm2l-l")}.items():
        cfg = ex.load_config(HERE / f"{name}.cfg")
        if args.repetitions:
            cfg = replace(cfg, repetitions=args.repetitions)
        tic = time.perf_counter()
        table = ex.run_experiment(cfg)
        ex.emit_results(table, out / f"{name}.csv")
        a, b = table.mean(better, "auc"), table.mean(worse, "auc")
        verdict = "holds" if a >= b else "does not hold"
        print(f"{name}: {better} AUC {a:.4f} vs {worse} {b:.4f} ({verdict}), "
              f"{time.perf_counter() - tic:.0f}s")


if __name__ == "__main__":
    main()
