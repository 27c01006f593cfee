"""Parsers and serializers for the CoNLL-2012 coreference column format and
the unified jsonlines interchange, plus the speaker-token text transform."""

from corefkit.formats.conll import (
    ConllParseError,
    ConllSerializeError,
    parse_conll,
    serialize_conll,
)
from corefkit.formats.jsonl import (
    JsonlFormatError,
    document_to_record,
    read_jsonl,
    record_to_document,
    write_jsonl,
)
from corefkit.formats.speakers import (
    SPEAKER_BEGIN,
    SPEAKER_END,
    SpeakerAugmentedDocument,
    SpeakerInjectionError,
    inject_speaker_tokens,
    is_speaker_marker,
    strip_speaker_tokens,
)

__all__ = [
    "ConllParseError",
    "ConllSerializeError",
    "parse_conll",
    "serialize_conll",
    "JsonlFormatError",
    "document_to_record",
    "read_jsonl",
    "record_to_document",
    "write_jsonl",
    "SPEAKER_BEGIN",
    "SPEAKER_END",
    "SpeakerAugmentedDocument",
    "SpeakerInjectionError",
    "inject_speaker_tokens",
    "is_speaker_marker",
    "strip_speaker_tokens",
]
