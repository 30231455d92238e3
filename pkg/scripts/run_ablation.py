"""Full objective vs local-only, global-only and lam = 0 variants."""

import argparse
from dataclasses import replace
from pathlib import Path

from dm2l import experiments as ex


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default=Path(__file__).parent / "configs" / "ablation.cfg")
    ap.add_argument("--repetitions", type=int)
    ap.add_argument("--out", default="results/ablation.csv")
    args = ap.parse_args()
    cfg = ex.load_config(args.config)
    if args.repetitions:
        cfg = replace(cfg, repetitions=args.repetitions)
    table = ex.run_ablation(cfg)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    ex.emit_results(table, args.out)
    print(f"{'method':12s} {'rho':>4s} {'auc':>8s} {'ap':>8s} {'rkl':>8s}")
    for a in table.aggregates():
        print(f"{a.method:12s} {a.rho:4g} {a.mean['auc']:8.4f} {a.mean['ap']:8.4f} "
              f"{a.mean['rkl']:8.4f}")


if __name__ == "__main__":
    main()
