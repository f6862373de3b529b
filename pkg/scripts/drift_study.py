"""Running-max drift of the finite optimal-covering constant across seeds.

    python3 scripts/drift_study.py [n_seeds] [instances]

Prints, per r, how many seeds keep the running max within 5% over the second half.
"""

import sys

from outerlp.harness import ExperimentConfig, run


def main(argv):
    seeds = int(argv[1]) if len(argv) > 1 else 20
    n = int(argv[2]) if len(argv) > 2 else 1000
    drifts = {1.0: [], 2.0: []}
    for k in range(seeds):
        cfg = ExperimentConfig(command="decompose", n=n, size=list(range(2, 9)), r=[1.0, 2.0],
                               seed=1000 * (k + 1))
        for row in run(cfg):
            if row["kind"] == "summary":
                drifts[row["r"]].append(row["drift"])
    for r, ds in drifts.items():
        ok = sum(d < 0.05 for d in ds)
        print(f"r={r:g}: {ok}/{len(ds)} seeds within 5%, max drift {max(ds):.3f}")


if __name__ == "__main__":
    main(sys.argv)
