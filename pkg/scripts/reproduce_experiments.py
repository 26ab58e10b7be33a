"""Accuracy, size and runtime sweep over the synthetic streams.

Writes one JSON report and one CSV per distribution into ``--out`` and prints a
short table per checkpoint.  Defaults to the 3e4-element desk scale; pass
``--full-scale`` for 3e5 elements.
"""
import argparse
import pathlib

from tailsketch import Distribution, ErrorMode, StreamSpec, run_experiment
from tailsketch.experiment import DESK_LENGTH, FULL_LENGTH


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results")
    ap.add_argument("--epsilon", type=float, default=0.1)
    ap.add_argument("--tail-index", type=int, default=25)
    ap.add_argument("--every", type=int, default=5000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--full-scale", action="store_true")
    args = ap.parse_args()

    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    length = FULL_LENGTH if args.full_scale else DESK_LENGTH
    mode = ErrorMode.biased(args.epsilon)
    for dist in (Distribution.GAUSSIAN_PAIR, Distribution.BETA_PAIR):
        spec = StreamSpec(dist, rho=0.8, length=length, seed=args.seed)
        report = run_experiment(spec, mode, tail_indices=(args.tail_index,), checkpoint_every=args.every)
        (out / f"{dist.value}.json").write_text(report.to_json(indent=1))
        (out / f"{dist.value}.csv").write_text(report.to_csv())

        print(f"\n{dist.value}  eps={args.epsilon}  i={args.tail_index}  n={length}")
        print(f"{'n':>8} {'err lamL':>9} {'err lamU':>9} {'err C(.7)':>10} {'err C(.02)':>10} "
              f"{'tuples':>7} {'ratio':>7} {'ins ms':>7}")
        for cp in report.checkpoints:
            lam = {x["side"]: x["error"] for x in cp["lambda"]}
            cop = [c["error"] for c in cp["copula"]]
            print(f"{cp['n']:>8} {lam.get('lower', float('nan')):>9.4f} {lam.get('upper', float('nan')):>9.4f} "
                  f"{cop[0]:>10.2e} {cop[1]:>10.2e} {cp['tuple_count']:>7} {cp['size_ratio']:>7.3f} "
                  f"{1e3 * cp['insert_time']['mean_s']:>7.3f}")
        print(f"violations: {len(report.violations())}")


if __name__ == "__main__":
    main()
