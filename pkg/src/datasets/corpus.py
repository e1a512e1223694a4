"""
Signal corpora on disk.

CSV layout: device_id, x, y, floor, building, then one column per feature
(f0, f1, ...) or, for complex features, interleaved f0_re, f0_im, f1_re, ...
Blank x/y mean the position is unknown. Signal sets (K x p per device) are
flattened row-major; the sidecar manifest records their shape.

JSON layout: {"schema_version": 1, "manifest": {...}, "records": [...]}.
"""
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from src.errors import CorpusParseError, DataError, DimensionError
from utils.simple_logger import load_log, save_log

SCHEMA_VERSION = 1
BASE_COLUMNS = ("device_id", "x", "y", "floor", "building")

Schema = Literal["csv", "json"]

_REAL_COL = re.compile(r"^f(\d+)$")
_COMPLEX_COL = re.compile(r"^f(\d+)_(re|im)$")


@dataclass(frozen=True)
class SignalRecord:
    device_id: str
    features: np.ndarray  # (p,) vector or (K, p) signal set
    position: Optional[Tuple[float, float]] = None
    floor: Optional[int] = None
    building: Optional[int] = None

    def __post_init__(self):
        feats = np.array(self.features)
        if not np.iscomplexobj(feats):
            feats = feats.astype(float)
        feats.setflags(write=False)
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "device_id", str(self.device_id))
        if self.position is not None:
            pos = tuple(float(v) for v in self.position)
            if len(pos) != 2 or not all(np.isfinite(pos)):
                raise DataError(f"device {self.device_id}: position must be two finite numbers")
            object.__setattr__(self, "position", pos)


@dataclass(frozen=True)
class SignalCorpus:
    records: Tuple[SignalRecord, ...]
    manifest: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        records = tuple(self.records)
        if not records:
            raise DataError("corpus has no records")
        shape = records[0].features.shape
        seen = set()
        for r in records:
            if r.features.shape != shape:
                raise DimensionError(
                    f"device {r.device_id} has features of shape {r.features.shape}, expected {shape}"
                )
            if r.device_id in seen:
                raise DataError(f"duplicate device_id {r.device_id!r}")
            seen.add(r.device_id)
        manifest = dict(self.manifest)
        manifest["schema_version"] = SCHEMA_VERSION
        manifest["feature_shape"] = list(shape)
        manifest["complex"] = bool(any(np.iscomplexobj(r.features) for r in records))
        object.__setattr__(self, "records", records)
        object.__setattr__(self, "manifest", manifest)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def device_ids(self) -> List[str]:
        return [r.device_id for r in self.records]

    @property
    def feature_shape(self) -> Tuple[int, ...]:
        return self.records[0].features.shape

    @property
    def is_complex(self) -> bool:
        return bool(self.manifest["complex"])

    @property
    def is_set_corpus(self) -> bool:
        return len(self.feature_shape) == 2

    def features(self) -> np.ndarray:
        """(M, p) matrix for vector corpora."""
        if self.is_set_corpus:
            raise DimensionError("corpus holds signal sets; use signal_sets()")
        return np.vstack([r.features for r in self.records])

    def signal_sets(self) -> List[np.ndarray]:
        return [np.atleast_2d(r.features) for r in self.records]

    def positions(self) -> np.ndarray:
        """(M, 2) true positions, NaN rows where unknown."""
        out = np.full((len(self.records), 2), np.nan)
        for i, r in enumerate(self.records):
            if r.position is not None:
                out[i] = r.position
        return out

    def with_manifest(self, **extra) -> "SignalCorpus":
        return SignalCorpus(self.records, {**self.manifest, **extra})

    @classmethod
    def from_arrays(
        cls,
        features,
        positions: Optional[np.ndarray] = None,
        device_ids: Optional[Sequence[str]] = None,
        manifest: Optional[Dict[str, Any]] = None,
    ) -> "SignalCorpus":
        """Build from an (M, p) matrix or a list of M signal sets."""
        items = list(features)
        ids = list(device_ids) if device_ids is not None else [f"d{i:05d}" for i in range(len(items))]
        pos = None if positions is None else np.asarray(positions, dtype=float).reshape(-1, 2)
        records = []
        for i, (dev, feats) in enumerate(zip(ids, items)):
            p = None
            if pos is not None and np.all(np.isfinite(pos[i])):
                p = tuple(pos[i])
            records.append(SignalRecord(dev, feats, p))
        return cls(tuple(records), manifest or {})


def sidecar_path(path) -> Path:
    """corpus.csv -> corpus.meta.json"""
    path = Path(path)
    return path.with_suffix(".meta.json")


def _schema_of(path: Path, schema: Optional[Schema]) -> Schema:
    if schema is not None:
        return schema
    return "json" if path.suffix.lower() == ".json" else "csv"


def _fmt(value: Optional[float]) -> str:
    return "" if value is None else repr(float(value))


def save_corpus(corpus: SignalCorpus, path, schema: Optional[Schema] = None) -> Path:
    """Write a corpus; CSV output also writes the sidecar manifest."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if _schema_of(path, schema) == "json":
        return save_log(path, {
            "schema_version": SCHEMA_VERSION,
            "manifest": corpus.manifest,
            "records": [_record_to_json(r, corpus.is_complex) for r in corpus.records],
        })

    flat = [r.features.reshape(-1) for r in corpus.records]
    n = flat[0].size
    if corpus.is_complex:
        feat_cols = [f"f{j}_{part}" for j in range(n) for part in ("re", "im")]
    else:
        feat_cols = [f"f{j}" for j in range(n)]
    rows = []
    for r, values in zip(corpus.records, flat):
        x, y = r.position if r.position is not None else (None, None)
        row = [r.device_id, _fmt(x), _fmt(y),
               "" if r.floor is None else str(int(r.floor)),
               "" if r.building is None else str(int(r.building))]
        if corpus.is_complex:
            values = np.asarray(values, dtype=complex)
            row += [_fmt(v) for c in values for v in (c.real, c.imag)]
        else:
            row += [_fmt(v) for v in values]
        rows.append(row)
    pd.DataFrame(rows, columns=list(BASE_COLUMNS) + feat_cols).to_csv(path, index=False)
    save_log(sidecar_path(path), corpus.manifest)
    return path


def _record_to_json(r: SignalRecord, is_complex: bool) -> dict:
    if is_complex:
        feats = {"re": np.real(r.features).tolist(), "im": np.imag(r.features).tolist()}
    else:
        feats = r.features.tolist()
    return {
        "device_id": r.device_id,
        "features": feats,
        "position": None if r.position is None else list(r.position),
        "floor": r.floor,
        "building": r.building,
    }


def load_corpus(path, schema: Optional[Schema] = None) -> SignalCorpus:
    """
    Read a corpus written by save_corpus (or by hand in the same layout).

    Args:
        path: CSV or JSON file.
        schema: "csv" or "json"; inferred from the suffix when omitted.

    Returns:
        Validated SignalCorpus.

    Raises:
        CorpusParseError: ragged rows, non-numeric cells, duplicate ids
            (with the offending line number).
    """
    path = Path(path)
    if not path.exists():
        raise CorpusParseError("file not found", path=str(path))
    if _schema_of(path, schema) == "json":
        return _load_json(path)
    return _load_csv(path)


def _load_json(path: Path) -> SignalCorpus:
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise CorpusParseError(e.msg, line=e.lineno, path=str(path)) from e
    if data.get("schema_version") != SCHEMA_VERSION:
        raise CorpusParseError(f"unsupported schema_version {data.get('schema_version')!r}", path=str(path))
    records = []
    seen = set()
    for i, rec in enumerate(data.get("records", [])):
        try:
            feats = rec["features"]
            if isinstance(feats, dict):
                values = np.asarray(feats["re"], dtype=float) + 1j * np.asarray(feats["im"], dtype=float)
            else:
                values = np.asarray(feats, dtype=float)
            dev = str(rec["device_id"])
        except (KeyError, TypeError, ValueError) as e:
            raise CorpusParseError(f"record {i}: {e}", path=str(path)) from e
        if dev in seen:
            raise CorpusParseError(f"record {i}: duplicate device_id {dev!r}", path=str(path))
        seen.add(dev)
        records.append(SignalRecord(dev, values, rec.get("position"), rec.get("floor"), rec.get("building")))
    return SignalCorpus(tuple(records), data.get("manifest", {}))


def _feature_layout(columns: List[str], path: Path) -> Tuple[List[str], bool]:
    feats = [c for c in columns if c not in BASE_COLUMNS]
    if not feats:
        raise CorpusParseError("no feature columns", line=1, path=str(path))
    if all(_REAL_COL.match(c) for c in feats):
        return sorted(feats, key=lambda c: int(_REAL_COL.match(c).group(1))), False
    if all(_COMPLEX_COL.match(c) for c in feats):
        ordered = sorted(feats, key=lambda c: (int(_COMPLEX_COL.match(c).group(1)), c.endswith("_im")))
        if len(ordered) % 2:
            raise CorpusParseError("complex feature columns must come in _re/_im pairs", line=1, path=str(path))
        return ordered, True
    raise CorpusParseError(f"unrecognized feature columns {feats[:3]}", line=1, path=str(path))


def _load_csv(path: Path) -> SignalCorpus:
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False, na_values=[])
    except pd.errors.ParserError as e:
        m = re.search(r"line (\d+)", str(e))
        raise CorpusParseError(f"ragged row: {e}", line=int(m.group(1)) if m else None, path=str(path)) from e
    except pd.errors.EmptyDataError as e:
        raise CorpusParseError("empty file", path=str(path)) from e

    if "device_id" not in df.columns:
        raise CorpusParseError("missing device_id column", line=1, path=str(path))
    feat_cols, is_complex = _feature_layout(list(df.columns), path)

    # Rows shorter than the header come back with NaN in the trailing cells.
    short = df.isna().any(axis=1).to_numpy()
    if short.any():
        raise CorpusParseError("ragged row (too few fields)", line=int(np.argmax(short)) + 2, path=str(path))

    dup = df["device_id"].duplicated().to_numpy()
    if dup.any():
        i = int(np.argmax(dup))
        raise CorpusParseError(f"duplicate device_id {df['device_id'].iloc[i]!r}", line=i + 2, path=str(path))

    values = _numeric(df, feat_cols, path, allow_blank=False)
    if is_complex:
        values = values[:, 0::2] + 1j * values[:, 1::2]

    sidecar = sidecar_path(path)
    manifest = load_log(sidecar) if sidecar.exists() else {}
    shape = tuple(manifest.get("feature_shape", (values.shape[1],)))
    if int(np.prod(shape)) != values.shape[1]:
        raise CorpusParseError(f"manifest feature_shape {list(shape)} does not match {values.shape[1]} columns",
                               path=str(path))

    xy = _numeric(df, [c for c in ("x", "y") if c in df.columns], path, allow_blank=True)
    tags = _numeric(df, [c for c in ("floor", "building") if c in df.columns], path, allow_blank=True)
    records = []
    for i, dev in enumerate(df["device_id"]):
        pos = None
        if xy.shape[1] == 2:
            if np.isnan(xy[i]).sum() == 1:
                raise CorpusParseError("x and y must both be given or both be blank", line=i + 2, path=str(path))
            if not np.isnan(xy[i]).any():
                pos = tuple(xy[i])
        floor = building = None
        if "floor" in df.columns and not np.isnan(tags[i, 0]):
            floor = int(tags[i, 0])
        if "building" in df.columns and not np.isnan(tags[i, -1]):
            building = int(tags[i, -1])
        records.append(SignalRecord(dev, values[i].reshape(shape), pos, floor, building))
    return SignalCorpus(tuple(records), manifest)


def _parse_cell(text) -> float:
    # float() is correctly rounded; pd.to_numeric can be off by one ulp
    try:
        return float(str(text).strip())
    except ValueError:
        return np.nan


def _numeric(df: pd.DataFrame, columns: List[str], path: Path, allow_blank: bool) -> np.ndarray:
    if not columns:
        return np.empty((len(df), 0))
    raw = df[columns]
    parsed = raw.map(_parse_cell)
    bad = parsed.isna().to_numpy()
    if allow_blank:
        bad &= (raw.apply(lambda s: s.str.strip()) != "").to_numpy()
    if bad.any():
        row, col = np.argwhere(bad)[0]
        raise CorpusParseError(
            f"non-numeric cell {raw.iat[row, col]!r} in column {columns[col]}", line=int(row) + 2, path=str(path)
        )
    out = parsed.to_numpy(dtype=float)
    if not allow_blank and not np.all(np.isfinite(out)):
        row = int(np.argwhere(~np.isfinite(out))[0][0])
        raise CorpusParseError("non-finite feature value", line=row + 2, path=str(path))
    return out
