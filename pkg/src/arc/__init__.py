"""Desk-scale vision checkout: preprocessing pipeline, trainable CNN, and a
checkout session service."""

__version__ = "0.1.0"
