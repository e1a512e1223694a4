from src.datasets.corpus import SignalCorpus, SignalRecord, load_corpus, save_corpus
from src.datasets.rssi import ingest_rssi_dataset
from src.datasets.artifacts import (
    load_embedding,
    load_graph,
    load_model,
    save_embedding,
    save_graph,
    save_model,
    save_points,
)

__all__ = [
    "SignalCorpus",
    "SignalRecord",
    "ingest_rssi_dataset",
    "load_corpus",
    "load_embedding",
    "load_graph",
    "load_model",
    "save_corpus",
    "save_embedding",
    "save_graph",
    "save_model",
    "save_points",
]
