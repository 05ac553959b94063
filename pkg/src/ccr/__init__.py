"""Continuous, consistent, and reversible sequential facial-attribute editing.

The package trains a small encoder/generator pair with per-domain style
translators on a procedurally generated face dataset, then exposes the
editing-path algebra (apply, swap, reverse), an evaluation criterion, a CLI,
and an HTTP session service.
"""

from .registry import (
    Bits,
    Direction,
    Domain,
    DomainRegistry,
    EditStep,
    StyleSpec,
    TokenParseError,
    UnknownAttributeError,
    default_registry,
    parse_edit_token,
)

__all__ = [
    "Bits",
    "Direction",
    "Domain",
    "DomainRegistry",
    "EditStep",
    "StyleSpec",
    "TokenParseError",
    "UnknownAttributeError",
    "default_registry",
    "parse_edit_token",
]

__version__ = "0.1.0"
