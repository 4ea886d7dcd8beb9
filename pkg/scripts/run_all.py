"""Run every experiment at full size and write one CSV per subcommand."""
import argparse
import pathlib
import sys

from ftlab.harness import ExperimentConfig, run

FULL = {
    "shor-demo": {},
    "repetition-demo": {},
    "threshold-sweep": {"trials": "1000000"},
    "nonmarkov-threshold": {"A_grid": "2..50", "eta": "0.001", "L": "1000000", "delta": "1e-6"},
    "faultpath-verify": {"steps": "10", "models": "20", "eta_samples": "4"},
    "cbit-immunity": {},
    "cbit-impossibility": {"code": "random", "codes": "100"},
    "cphase-separation": {},
    "kalai-tail": {"trials": "1000000"},
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--workers", type=int, default=4)
    ap.add_argument("--outdir", default="results")
    args = ap.parse_args()
    out = pathlib.Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    failed = 0
    for name, params in FULL.items():
        cfg = ExperimentConfig(name, params, args.seed, None, "csv", args.workers)
        rep = run(cfg)
        (out / f"{name}.csv").write_text(rep.to_csv())
        failed += not rep.passed
        print(f"{name:22s} {'PASS' if rep.passed else 'FAIL'}  {rep.duration:7.2f}s")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
