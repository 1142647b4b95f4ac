"""Dutch HR text de-identification: tokenizer, recognizers, pluggable NER,
suppression, strict/loose scoring and job-title dataset construction."""

from hrdeid.corpus import (
    Annotation,
    Document,
    Label,
    Tag,
    TaggedToken,
    Token,
)
from hrdeid.errors import BackendError, ConfigError, DeidError, InputError

__version__ = "0.1.0"

__all__ = [
    "Annotation",
    "BackendError",
    "ConfigError",
    "DeidError",
    "Document",
    "InputError",
    "Label",
    "Tag",
    "TaggedToken",
    "Token",
]
