"""Monte-Carlo acceptance rates of the honest and best deterministic models.

The threshold delta is half the analytic expected MDL value of the honest box
under i.i.d. SV inputs.  One CSV row per (model, seed).

    python3 scripts/simulate_acceptance.py --eps 0.05 --n 1000000 --seeds 100
"""
import argparse
import sys

import numpy as np

from hardyamp.bell import hardy_frame_222, mdl_functional
from hardyamp.protocol import (BoxSequenceModel, SVParams, best_deterministic_model,
                               input_distribution, run_protocol)
from hardyamp.quantum import THETA_STAR, hardy_box, noise_tolerance


def expected_mdl(box, params, frame):
    c = mdl_functional(frame, params.eps).coeff
    nu = input_distribution(params, "iid")
    return float(np.einsum("xy,xyab,xyab->", nu, c, box.p))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--eps", type=float, default=0.05)
    ap.add_argument("--n", type=int, default=1_000_000)
    ap.add_argument("--seeds", type=int, default=100)
    ap.add_argument("--eta", type=float, default=0.0, help="noise of the honest box")
    args = ap.parse_args()
    frame = hardy_frame_222()
    params = SVParams(args.eps)
    delta = expected_mdl(hardy_box(THETA_STAR, 0.0), params, frame) / 2
    honest = BoxSequenceModel("honest", theta=THETA_STAR, eta=args.eta)
    det = best_deterministic_model(frame, params)
    print(f"# delta={delta:.6g} eta_max={noise_tolerance(args.eps):.6f}", file=sys.stderr)
    print("model,seed,Ln,accepted")
    acc = {"honest": 0, "deterministic": 0}
    for name, model in (("honest", honest), ("deterministic", det)):
        for seed in range(args.seeds):
            tr = run_protocol(model, params, args.n, seed=seed)
            ok = tr.Ln >= delta
            acc[name] += ok
            print(f"{name},{seed},{tr.Ln:.8g},{int(ok)}")
    print(f"# accepted: honest {acc['honest']}/{args.seeds}, deterministic {acc['deterministic']}/{args.seeds}",
          file=sys.stderr)


if __name__ == "__main__":
    main()
