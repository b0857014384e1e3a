"""Synthetic multi-modal market data with planted effects, plus file I/O."""

from mmft.datagen.generate import (
    APPENDIX_B_TYPES,
    DEFAULT_HALF_LIFE,
    NEGATIVE_WORDS,
    POSITIVE_WORDS,
    Dataset,
    Document,
    EventTypeSpec,
    GenSpec,
    event_component,
    generate,
    resimulate,
    sentiment_score,
)
from mmft.datagen.io import FILES, load_dataset, save_dataset

__all__ = [
    "APPENDIX_B_TYPES", "DEFAULT_HALF_LIFE", "FILES", "NEGATIVE_WORDS", "POSITIVE_WORDS",
    "Dataset", "Document", "EventTypeSpec", "GenSpec", "event_component", "generate",
    "load_dataset", "resimulate", "save_dataset", "sentiment_score",
]
