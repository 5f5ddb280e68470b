"""GoEmotions label sets and their collapse onto Ekman's basic emotions."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import TaxonomyError

GO_EMOTIONS = (
    "admiration", "amusement", "anger", "annoyance", "approval", "caring",
    "confusion", "curiosity", "desire", "disappointment", "disapproval",
    "disgust", "embarrassment", "excitement", "fear", "gratitude", "grief",
    "joy", "love", "nervousness", "optimism", "pride", "realization",
    "relief", "remorse", "sadness", "surprise", "neutral",
)  # fmt: skip
EKMAN_EMOTIONS = ("anger", "disgust", "fear", "joy", "sadness", "surprise", "neutral")

EKMAN_GROUPS = {
    "anger": ("anger", "annoyance", "disapproval"),
    "disgust": ("disgust",),
    "fear": ("fear", "nervousness"),
    "joy": (
        "admiration", "amusement", "approval", "caring", "desire", "excitement",
        "gratitude", "joy", "love", "optimism", "pride", "relief",
    ),
    "sadness": ("sadness", "disappointment", "embarrassment", "grief", "remorse"),
    "surprise": ("surprise", "realization", "confusion", "curiosity"),
}  # fmt: skip

GO_TO_EKMAN = {go: ek for ek, members in EKMAN_GROUPS.items() for go in members}


@dataclass(frozen=True)
class EmotionTaxonomy:
    scheme: str
    names: tuple
    mapping: dict | None = None

    def index(self, name):
        try:
            return self.names.index(name)
        except ValueError:
            raise TaxonomyError(f"{name!r} is not a {self.scheme} emotion") from None


GO28 = EmotionTaxonomy("go28", GO_EMOTIONS)
EKMAN6 = EmotionTaxonomy("ekman6", EKMAN_EMOTIONS, GO_TO_EKMAN)
TAXONOMIES = {"go28": GO28, "ekman6": EKMAN6}


def map_to_ekman(emotions):
    """Image of a GoEmotions label set under the Ekman collapse; neutral passes through."""
    out = set()
    for name in emotions:
        if name == "neutral":
            out.add("neutral")
        elif name in GO_TO_EKMAN:
            out.add(GO_TO_EKMAN[name])
        else:
            raise TaxonomyError(f"unknown GoEmotions label {name!r}")
    return frozenset(out)


def reduce_single_label(example, scheme="ekman6"):
    """Collapse an example to one Ekman label, or ``None`` when it maps to several."""
    if scheme != "ekman6":
        raise TaxonomyError(f"single-label reduction is defined for ekman6, not {scheme!r}")
    if not example.emotions:
        return None
    mapped = map_to_ekman(example.emotions)
    if len(mapped) != 1:
        return None
    return example.with_emotions(mapped)
