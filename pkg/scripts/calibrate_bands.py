"""
Regenerate tests/fixtures/scaling_bands.json from oracle sweep runs.

Each entry pins the free-fit growth exponent ζ̂ of one committed sweep config;
the acceptance test reruns the config and compares against the pinned value.
"""

import argparse
import json
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT))

from src.config import Config
from src.runner import ExperimentRunner

DEFAULT_CONFIGS = ["docs/experiments/spectral_sweep.yaml"]


def calibrate(configs, margin: float) -> dict:
    bands = {}
    with tempfile.TemporaryDirectory() as tmp:
        config = Config()
        config.output.root = tmp
        runner = ExperimentRunner(config)
        for path in configs:
            outcome = runner.run(ROOT / path)
            if outcome.exit_code == 2 or outcome.error:
                raise SystemExit(f"{path}: run failed ({outcome.error or outcome.config_errors})")
            fit = json.loads((outcome.directory / "fit.json").read_text())
            zeta_hat = float(fit["zeta_hat"])
            bands[outcome.name] = {
                "config": path,
                "zeta_hat": zeta_hat,
                "band": [zeta_hat * (1.0 - margin), zeta_hat * (1.0 + margin)],
            }
            print(f"{outcome.name}: ζ̂ = {zeta_hat:.6g}")
    return bands


def main():
    parser = argparse.ArgumentParser(description="Pin the scaling-fit bands used by the acceptance tests")
    parser.add_argument("configs", nargs="*", default=DEFAULT_CONFIGS)
    parser.add_argument("--margin", type=float, default=0.1, help="Relative half-width of each band")
    parser.add_argument("--out", default=str(ROOT / "tests" / "fixtures" / "scaling_bands.json"))
    args = parser.parse_args()

    bands = calibrate(args.configs, args.margin)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(bands, indent=2, sort_keys=True) + "\n")
    print(f"Wrote {out}")


if __name__ == "__main__":
    main()
