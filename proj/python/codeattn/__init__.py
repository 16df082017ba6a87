"""Python bindings for the codeattn Java code encoder and its analyses."""

from ._core import (
    Encoder,
    Vocab,
    __version__,
    jensen_shannon,
    lex,
    strip_comments,
)

__all__ = ["Encoder", "Vocab", "jensen_shannon", "lex", "strip_comments", "__version__"]
