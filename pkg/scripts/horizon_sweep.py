"""Aligned recovery error of the headline signal as the lambda horizon grows."""
from __future__ import annotations

import argparse

from phaseless.recovery import recover
from phaseless.scenario import headline_dict, scenario_from_dict
from phaseless.transforms import sample_spectrogram


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--horizons", type=int, nargs="+", default=[9, 13, 17, 25, 33])
    args = ap.parse_args()
    sc = scenario_from_dict(headline_dict())
    f = sc.synthesize()
    print("horizon  aligned_error")
    for H in args.horizons:
        samples = sample_spectrogram(f, sc.window, sc.lam, sc.gamma, H, sc.K)
        rep = recover(samples, sc.cfg, truth=f)
        print(f"{H:7d}  {rep.aligned_error:.3e}")


if __name__ == "__main__":
    main()
