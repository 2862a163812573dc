import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

from src.schema import experiment_json_schema

target = Path(__file__).resolve().parents[1] / "docs" / "experiment.schema.json"
target.write_text(json.dumps(experiment_json_schema(), indent=2, sort_keys=True) + "\n")
print(f"Wrote {target}")
