"""Biased versus uniform summaries on one stream: measured tail error and the
theoretical bound at a fixed tail index as the stream grows."""
import argparse
import json

from tailsketch import Distribution, ErrorMode, StreamSpec, compare_modes
from tailsketch.experiment import theoretical_tail_bounds


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--distribution", default="gaussian", choices=[d.value for d in Distribution])
    ap.add_argument("--epsilon", type=float, default=0.1)
    ap.add_argument("--tail-index", type=int, default=25)
    ap.add_argument("--length", type=int, default=100_000)
    ap.add_argument("--every", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--json", help="also write the paired reports here")
    args = ap.parse_args()

    marks = list(range(args.every, args.length + 1, args.every))
    spec = StreamSpec(Distribution(args.distribution), length=args.length, seed=args.seed)
    biased, uniform = compare_modes(spec, args.epsilon, args.tail_index, marks)
    bb = theoretical_tail_bounds(ErrorMode.biased(args.epsilon), args.tail_index, marks)
    ub = theoretical_tail_bounds(ErrorMode.uniform(args.epsilon), args.tail_index, marks)
    be = biased.series("lambda")[f"lower:{args.tail_index}"]
    ue = uniform.series("lambda")[f"lower:{args.tail_index}"]
    bt = [cp["tuple_count"] for cp in biased.checkpoints]
    ut = [cp["tuple_count"] for cp in uniform.checkpoints]

    print(f"{'n':>8} {'biased err':>11} {'bound':>7} {'tuples':>7} {'uniform err':>12} {'bound':>9} {'tuples':>7}")
    for row in zip(marks, be, bb, bt, ue, ub, ut):
        print("{:>8} {:>11.4f} {:>7.3f} {:>7} {:>12.4f} {:>9.1f} {:>7}".format(*row))
    if args.json:
        with open(args.json, "w") as fh:
            json.dump({"biased": biased.to_dict(), "uniform": uniform.to_dict()}, fh)


if __name__ == "__main__":
    main()
