"""Static and numeric phase-coherence verdicts over a random program corpus.

Programs are generated the same way as the test corpus (three LO channels,
one constraint, reset in every repetition, once, or never).

    python3 scripts/coherence_corpus.py --n 50 --reps 100
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

from corpus import make_case  # noqa: E402
from qctrlsim.pulselang import check_phase_coherence, parse, simulate_phase_coherence  # noqa: E402


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=50)
    ap.add_argument("--reps", type=int, default=100)
    args = ap.parse_args()
    agree = 0
    print("seed kind     reset lo_zero | dds static/numeric | analog_lo static/numeric")
    for seed in range(args.n):
        case = make_case(seed)
        p = parse(case.text)
        cells = []
        for model in ("dds", "analog_lo"):
            s = check_phase_coherence(p, "k", model)
            n = simulate_phase_coherence(p, "k", model, args.reps)
            agree += s.passed == n.passed
            cells.append(f"{'pass' if s.passed else 'fail'}/{'pass' if n.passed else 'fail'} "
                         f"(var {n.variance:.1e})")
        print(f"{seed:4d} {case.kind:8s} {case.reset:5s} {str(case.lo_cancels):7s} | "
              f"{cells[0]:18s} | {cells[1]}")
    print(f"static and numeric agree on {agree}/{2 * args.n}")


if __name__ == "__main__":
    main()
