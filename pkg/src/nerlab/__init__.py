"""Corpus engineering toolkit for multi-layer NER annotations of drug reviews."""

__version__ = "0.1.0"
