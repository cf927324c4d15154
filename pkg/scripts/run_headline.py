"""Sample and recover the headline scenario, printing the report."""
from __future__ import annotations

import json

from phaseless.recovery import recover
from phaseless.scenario import headline_dict, scenario_from_dict
from phaseless.transforms import sample_spectrogram


def main() -> None:
    sc = scenario_from_dict(headline_dict())
    f = sc.synthesize()
    samples = sample_spectrogram(f, sc.window, sc.lam, sc.gamma, sc.horizon, sc.K)
    rep = recover(samples, sc.cfg, truth=f)
    print(json.dumps({"aligned_error": rep.aligned_error, "lambda_points": len(samples.lambda_points)}, indent=2))


if __name__ == "__main__":
    main()
