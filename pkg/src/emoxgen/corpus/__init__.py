from .cleaning import clean_text
from .datasets import (
    DatasetSpec,
    LabeledExample,
    Splits,
    load_dataset,
    parse_predicate,
    read_jsonl,
    split,
    write_jsonl,
)
from .synth import SynthBenchmark, SynthConfig, synth_generate, write_benchmark
from .taxonomy import (
    EKMAN6,
    EKMAN_EMOTIONS,
    EKMAN_GROUPS,
    GO28,
    GO_EMOTIONS,
    GO_TO_EKMAN,
    EmotionTaxonomy,
    map_to_ekman,
    reduce_single_label,
)

__all__ = [
    "DatasetSpec",
    "EKMAN6",
    "EKMAN_EMOTIONS",
    "EKMAN_GROUPS",
    "EmotionTaxonomy",
    "GO28",
    "GO_EMOTIONS",
    "GO_TO_EKMAN",
    "LabeledExample",
    "Splits",
    "SynthBenchmark",
    "SynthConfig",
    "clean_text",
    "load_dataset",
    "map_to_ekman",
    "parse_predicate",
    "read_jsonl",
    "reduce_single_label",
    "split",
    "synth_generate",
    "write_benchmark",
    "write_jsonl",
]
