import json
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional
from unittest import mock

import numpy as np

from fedclinic import main

# same class balance and missing-value pattern as the canonical UCI file
SYNTHETIC_BENIGN = 458
SYNTHETIC_MALIGNANT = 241
SYNTHETIC_MISSING_BENIGN = 14
SYNTHETIC_MISSING_MALIGNANT = 2
SYNTHETIC_LINES = SYNTHETIC_BENIGN + SYNTHETIC_MALIGNANT
SYNTHETIC_CLEAN = SYNTHETIC_LINES - SYNTHETIC_MISSING_BENIGN - SYNTHETIC_MISSING_MALIGNANT
SYNTHETIC_CLEAN_BENIGN = SYNTHETIC_BENIGN - SYNTHETIC_MISSING_BENIGN
SYNTHETIC_CLEAN_MALIGNANT = SYNTHETIC_MALIGNANT - SYNTHETIC_MISSING_MALIGNANT

BARE_NUCLEI_COLUMN = 5

FAST_EXPERIMENT: Dict[str, Any] = {
    "federation": {
        "rounds": 3,
        "training": {"local_epochs": 1},
    },
    "epsilon_grid": [5.0, 50.0],
    "client_grid": [4],
    "seeds": [0, 1],
}


def run_fedclinic_cli(fedclinic_args: List[str]) -> int:
    with mock.patch.object(sys, "argv", ["fedclinic"] + fedclinic_args):
        return main.cli()


def synthetic_bcwd_lines(seed: int = 1234) -> List[str]:
    """BCWD-format lines: benign attributes in 1..4, malignant in 5..10.

    Mitoses stays low for both classes, as in the real file.
    """
    rng = np.random.default_rng(seed)
    classes = np.array([2] * SYNTHETIC_BENIGN + [4] * SYNTHETIC_MALIGNANT)
    classes = classes[rng.permutation(len(classes))]

    benign_rows = np.flatnonzero(classes == 2)
    malignant_rows = np.flatnonzero(classes == 4)
    missing = set(
        rng.choice(benign_rows, SYNTHETIC_MISSING_BENIGN, replace=False).tolist()
        + rng.choice(malignant_rows, SYNTHETIC_MISSING_MALIGNANT, replace=False).tolist()
    )

    lines = []
    for i, class_code in enumerate(classes):
        if class_code == 2:
            attributes = rng.integers(1, 5, size=9)
            attributes[8] = 1
        else:
            attributes = rng.integers(5, 11, size=9)
            attributes[8] = rng.integers(1, 4)
        fields = [str(a) for a in attributes]
        if i in missing:
            fields[BARE_NUCLEI_COLUMN] = "?"
        lines.append(",".join([str(1000000 + i)] + fields + [str(class_code)]))
    return lines


def write_synthetic_bcwd(path: Path, seed: int = 1234) -> Path:
    path.write_text("\n".join(synthetic_bcwd_lines(seed)) + "\n", encoding="utf-8")
    return path


def _merge(base: Dict[str, Any], overrides: Dict[str, Any]) -> Dict[str, Any]:
    merged = dict(base)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def write_config(
    path: Path,
    dataset_path: Optional[Path],
    base: Optional[Dict[str, Any]] = None,
    **overrides: Any,
) -> Path:
    """Write an experiment config; nested dict overrides are merged into base"""
    config: Dict[str, Any] = {} if dataset_path is None else {"dataset_path": str(dataset_path)}
    config = _merge(_merge(config, base or {}), overrides)
    path.write_text(json.dumps(config, indent=2), encoding="utf-8")
    return path
