"""Holdout comparison of Naive2, SSL and SSL-O on a monthly panel.

Defaults to the bundled synthetic panel; pass --input for a long-format
CSV (id,t,value) or a directory of t,value files.

    python3 scripts/run_evaluation.py --output-dir results/eval
"""
import argparse
from pathlib import Path

from sslearn.evaluation import EvalConfig, bundled_panel, evaluate_panel, read_panel


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--input", help="panel CSV or directory; bundled panel if omitted")
    ap.add_argument("--horizon", type=int, default=18)
    ap.add_argument("--alpha", type=float, default=0.1)
    ap.add_argument("--criterion", default="AIC", choices=["AIC", "BIC"])
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--output-dir", help="write per_series.csv and aggregate.json here")
    args = ap.parse_args()

    panel = read_panel(args.input) if args.input else bundled_panel()
    cfg = EvalConfig(horizon=args.horizon, alpha=args.alpha, criterion=args.criterion)
    rep = evaluate_panel(panel, cfg, workers=args.workers)
    print(f"{len(panel)} series, horizon {args.horizon}")
    print(f"{'model':>7} {'sMAPE':>8} {'MASE':>7} {'OWA':>6}")
    for model, agg in rep.aggregate.items():
        print(f"{model:>7} {agg['sMAPE']:>8.3f} {agg['MASE']:>7.3f} {agg['OWA']:>6.3f}")
    if args.output_dir:
        out = Path(args.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        rep.write(out / "per_series.csv", out / "aggregate.json")


if __name__ == "__main__":
    main()
