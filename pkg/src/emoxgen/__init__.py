"""Emotion-enriched multitask hate-speech detection with cross-domain evaluation."""

__version__ = "0.1.0"
