"""
Ingestion of the public WiFi RSSI fingerprinting format.

Expected columns: WAP001 .. WAPnnn (one per receiver), LONGITUDE, LATITUDE
(meters), FLOOR, BUILDINGID. Undetected receivers carry a sentinel value
(+100 in the public dataset). Rows taken at the same location are merged into
one record by their coordinate-wise median.
"""
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd

from config.manager import settings
from src.datasets.corpus import SignalCorpus, SignalRecord
from src.errors import CorpusParseError, DataError
from src.synth.generator import median_signal

LOCATION_COLUMNS = ["LONGITUDE", "LATITUDE", "FLOOR", "BUILDINGID"]
WAP_PATTERN = r"^WAP\d+$"


def ingest_rssi_dataset(
    path,
    floor_filter: Optional[int] = None,
    building_filter: Optional[int] = None,
    missing_sentinel: Optional[float] = None,
    floor_value: Optional[float] = None,
    min_coverage: float = 0.0,
) -> SignalCorpus:
    """
    Load an RSSI fingerprint CSV into a corpus of per-location median signals.

    Args:
        path: CSV file.
        floor_filter: keep only this FLOOR value.
        building_filter: keep only this BUILDINGID value.
        missing_sentinel: "not detected" marker (default from settings.ingest).
        floor_value: value written in place of the sentinel, dBm.
        min_coverage: drop receivers detected in less than this fraction of the
            kept rows (0 keeps every receiver).

    Returns:
        SignalCorpus with one record per distinct (position, floor, building),
        in sorted location order.
    """
    path = Path(path)
    sentinel = settings.ingest.missing_sentinel if missing_sentinel is None else float(missing_sentinel)
    fill = settings.ingest.floor_value if floor_value is None else float(floor_value)
    try:
        df = pd.read_csv(path, float_precision="round_trip")
    except FileNotFoundError as e:
        raise CorpusParseError("file not found", path=str(path)) from e
    except pd.errors.ParserError as e:
        raise CorpusParseError(str(e), path=str(path)) from e

    wap_cols = list(df.filter(regex=WAP_PATTERN).columns)
    missing = [c for c in LOCATION_COLUMNS if c not in df.columns]
    if not wap_cols:
        missing.append("WAP###")
    if missing:
        raise DataError(f"{path}: missing expected columns {missing}")

    if floor_filter is not None:
        df = df[df["FLOOR"] == floor_filter]
    if building_filter is not None:
        df = df[df["BUILDINGID"] == building_filter]
    if df.empty:
        raise DataError(f"{path}: no rows left after floor/building filtering")

    rssi = df[wap_cols].astype(float)
    detected = rssi != sentinel
    if min_coverage > 0:
        keep = detected.mean(axis=0) >= min_coverage
        wap_cols = [c for c in wap_cols if keep[c]]
        if not wap_cols:
            raise DataError(f"no receiver reaches coverage {min_coverage}")
        rssi = rssi[wap_cols]
        detected = detected[wap_cols]
    rssi = rssi.where(detected, fill)

    merged = pd.concat([df[LOCATION_COLUMNS].reset_index(drop=True), rssi.reset_index(drop=True)], axis=1)
    records = []
    for i, (key, group) in enumerate(merged.groupby(LOCATION_COLUMNS, sort=True)):
        lon, lat, floor, building = key
        records.append(SignalRecord(
            device_id=f"loc{i:05d}",
            features=median_signal(group[wap_cols].to_numpy()),
            position=(float(lon), float(lat)),
            floor=int(floor),
            building=int(building),
        ))

    manifest = {
        "source": path.name,
        "format": "rssi",
        "missing_sentinel": sentinel,
        "floor_value": fill,
        "floor_filter": floor_filter,
        "building_filter": building_filter,
        "min_coverage": float(min_coverage),
        "receivers": wap_cols,
        "raw_rows": int(len(df)),
    }
    return SignalCorpus(tuple(records), manifest)


def receiver_coverage(corpus: SignalCorpus) -> np.ndarray:
    """Fraction of records in which each receiver is above the floor value."""
    fill = corpus.manifest.get("floor_value", settings.ingest.floor_value)
    return (corpus.features() > fill).mean(axis=0)
