"""Breast Cancer Wisconsin ingestion, cleaning, normalization and sharding.

The UCI file has no header and 11 comma-separated fields per line: sample id,
nine ordinal attributes in [1, 10] and the class code (2 benign, 4 malignant).
Missing attributes are written as "?".
"""

import csv
import logging
import re
from collections import Counter
from pathlib import Path
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from fedclinic.constants import (
    ATTRIBUTE_MAX,
    ATTRIBUTE_MIN,
    CLASS_BENIGN,
    CLASS_MALIGNANT,
    LABEL_BENIGN,
    LABEL_MALIGNANT,
    N_FEATURES,
)
from fedclinic.util import ConfigError, DataError, ParseError

logger = logging.getLogger(__name__)

MISSING_MARKER = "?"
N_COLUMNS = N_FEATURES + 2
SHARD_MODES = ("iid", "label-skew")
# pandas python engine: "Expected 11 fields in line 3, saw 12"
_TOO_MANY_FIELDS = re.compile(r"line (\d+), saw (\d+)")

_ATTRIBUTE_SPAN = ATTRIBUTE_MAX - ATTRIBUTE_MIN


class RawRecord(NamedTuple):
    sample_id: int
    attributes: Tuple[Optional[int], ...]
    class_code: int

    @property
    def has_missing(self) -> bool:
        return any(a is None for a in self.attributes)


class FeatureRecord(NamedTuple):
    features: Tuple[float, ...]
    label: int


class ClientShard(NamedTuple):
    client_id: int
    records: Tuple[FeatureRecord, ...]
    poisoned: bool = False


def _parse_int(field: str, path: Path, line_number: int, column: str) -> int:
    try:
        return int(field)
    except ValueError:
        raise ParseError(path, line_number, f"{column} {field!r} is not an integer")


def _parse_row(fields: Sequence[str], path: Path, line_number: int) -> RawRecord:
    fields = [f.strip() for f in fields]
    sample_id = _parse_int(fields[0], path, line_number, "sample id")
    attributes: List[Optional[int]] = []
    for i, field in enumerate(fields[1:-1], start=1):
        if field == MISSING_MARKER:
            attributes.append(None)
            continue
        value = _parse_int(field, path, line_number, f"attribute {i}")
        if not ATTRIBUTE_MIN <= value <= ATTRIBUTE_MAX:
            raise ParseError(
                path,
                line_number,
                f"attribute {i} value {value} outside [{ATTRIBUTE_MIN}, {ATTRIBUTE_MAX}]",
            )
        attributes.append(value)

    class_code = _parse_int(fields[-1], path, line_number, "class")
    if class_code not in (CLASS_BENIGN, CLASS_MALIGNANT):
        raise ParseError(path, line_number, f"unknown class code {class_code}")

    return RawRecord(sample_id, tuple(attributes), class_code)


def _read_frame(path: Path) -> pd.DataFrame:
    """Fields as raw strings, one row per physical line; short rows are padded with NA"""
    try:
        return pd.read_csv(
            path,
            header=None,
            names=list(range(N_COLUMNS)),
            dtype=object,
            keep_default_na=False,
            skip_blank_lines=False,
            encoding="utf-8",
            engine="python",
        )
    except OSError as e:
        raise DataError(f"Unable to read dataset {path}: {e.strerror or e}")
    except UnicodeDecodeError as e:
        raise DataError(f"Dataset {path} is not UTF-8 text: {e.reason} at byte {e.start}")
    except pd.errors.EmptyDataError:
        return pd.DataFrame(columns=list(range(N_COLUMNS)), dtype=object)
    except csv.Error as e:
        raise DataError(f"Unable to parse dataset {path}: {e}")
    except pd.errors.ParserError as e:
        too_many = _TOO_MANY_FIELDS.search(str(e))
        if too_many is None:
            raise DataError(f"Unable to parse dataset {path}: {e}")
        line_number, found = (int(g) for g in too_many.groups())
        raise ParseError(path, line_number, f"expected {N_COLUMNS} columns, found {found}")
    except ValueError as e:
        raise DataError(f"Unable to parse dataset {path}: {e}")


def load_raw(path: Path) -> List[RawRecord]:
    path = Path(path)
    frame = _read_frame(path)
    if len(frame) and not isinstance(frame.index, pd.RangeIndex):
        # pandas turns surplus leading fields of the first line into an index
        found = N_COLUMNS + frame.index.nlevels
        raise ParseError(path, 1, f"expected {N_COLUMNS} columns, found {found}")

    records = []
    for line_number, row in enumerate(frame.itertuples(index=False, name=None), start=1):
        present = [str(field) for field in row if not pd.isna(field)]
        if not present or (len(present) == 1 and not present[0].strip()):
            continue
        if len(present) != N_COLUMNS:
            raise ParseError(
                path, line_number, f"expected {N_COLUMNS} columns, found {len(present)}"
            )
        records.append(_parse_row(present, path, line_number))
    logger.info(f"read {len(records)} raw records from {path}")
    return records


def clean(raw: Sequence[RawRecord]) -> List[RawRecord]:
    cleaned = [r for r in raw if not r.has_missing]
    logger.debug(f"dropped {len(raw) - len(cleaned)} records with missing attributes")
    return cleaned


def normalize(raw: RawRecord) -> FeatureRecord:
    if raw.has_missing:
        raise ValueError(f"record {raw.sample_id} has missing attributes")
    features = tuple((a - ATTRIBUTE_MIN) / _ATTRIBUTE_SPAN for a in raw.attributes)  # type: ignore[operator]
    label = LABEL_MALIGNANT if raw.class_code == CLASS_MALIGNANT else LABEL_BENIGN
    return FeatureRecord(features, label)


def denormalize(record: FeatureRecord) -> Tuple[int, ...]:
    return tuple(int(round(f * _ATTRIBUTE_SPAN)) + ATTRIBUTE_MIN for f in record.features)


def load_dataset(path: Path) -> List[FeatureRecord]:
    """Read, clean and normalize the UCI file"""
    records = [normalize(r) for r in clean(load_raw(path))]
    if not records:
        raise DataError(f"Dataset {path} has no complete records")
    counts = class_counts(records)
    logger.info(
        f"{len(records)} clean records: {counts.get(LABEL_BENIGN, 0)} benign, "
        f"{counts.get(LABEL_MALIGNANT, 0)} malignant"
    )
    return records


def class_counts(records: Sequence[FeatureRecord]) -> Dict[int, int]:
    return dict(Counter(r.label for r in records))


def to_arrays(records: Sequence[FeatureRecord]) -> Tuple[np.ndarray, np.ndarray]:
    if not records:
        return np.empty((0, N_FEATURES)), np.empty(0)
    X = np.array([r.features for r in records], dtype=np.float64)
    y = np.array([r.label for r in records], dtype=np.float64)
    return X, y


def stratified_split(
    data: Sequence[FeatureRecord], test_fraction: float, seed: int
) -> Tuple[List[FeatureRecord], List[FeatureRecord]]:
    if not 0 < test_fraction < 1:
        raise ConfigError(f"test_fraction must lie in (0, 1), got {test_fraction}")

    rng = np.random.default_rng(seed)
    test_indices: List[int] = []
    for label in sorted({r.label for r in data}):
        indices = np.array([i for i, r in enumerate(data) if r.label == label])
        n_test = int(round(test_fraction * len(indices)))
        test_indices.extend(rng.permutation(indices)[:n_test].tolist())

    in_test = set(test_indices)
    train = [r for i, r in enumerate(data) if i not in in_test]
    test = [r for i, r in enumerate(data) if i in in_test]
    return train, test


def _label_skew_partition(
    train: Sequence[FeatureRecord], n_clients: int, alpha: float, rng: np.random.Generator
) -> List[List[int]]:
    parts: List[List[int]] = [[] for _ in range(n_clients)]
    for label in sorted({r.label for r in train}):
        indices = rng.permutation([i for i, r in enumerate(train) if r.label == label])
        proportions = rng.dirichlet(np.full(n_clients, alpha))
        cuts = (np.cumsum(proportions)[:-1] * len(indices)).astype(int)
        for client, chunk in enumerate(np.split(indices, cuts)):
            parts[client].extend(chunk.tolist())

    # every clinic needs at least one record
    for client in range(n_clients):
        if not parts[client]:
            donor = max(range(n_clients), key=lambda c: len(parts[c]))
            parts[client].append(parts[donor].pop())
    return parts


def shard(
    train: Sequence[FeatureRecord],
    n_clients: int,
    mode: str = "iid",
    seed: int = 0,
    alpha: float = 1.0,
) -> List[ClientShard]:
    """Partition the training set across simulated clinics"""
    if n_clients < 1:
        raise ConfigError(f"n_clients must be at least 1, got {n_clients}")
    if n_clients > len(train):
        raise ConfigError(
            f"n_clients ({n_clients}) exceeds the number of training records ({len(train)})"
        )
    if mode not in SHARD_MODES:
        raise ConfigError(f"unknown sharding mode {mode!r}")

    if n_clients == 1:
        return [ClientShard(0, tuple(train))]

    rng = np.random.default_rng(seed)
    if mode == "iid":
        parts = [p.tolist() for p in np.array_split(rng.permutation(len(train)), n_clients)]
    else:
        if alpha <= 0:
            raise ConfigError(f"label-skew alpha must be positive, got {alpha}")
        parts = _label_skew_partition(train, n_clients, alpha, rng)

    shards = [
        ClientShard(client_id, tuple(train[i] for i in part))
        for client_id, part in enumerate(parts)
    ]
    logger.debug(f"shard sizes: {[len(s.records) for s in shards]}")
    return shards
