"""CoNLL-2012 coreference column format.

Documents are delimited by ``#begin document (<id>); part <n>`` and
``#end document`` lines; sentences by blank lines. The final column is the
coreference column ("-", "(k", "k)", "(k)" and pipe-joined combinations).
Each (id, part) pair becomes one Document keyed ``<id>_<part>``.

The serializer emits the normalized 12-column layout (single-space
separated): id, part, word number, word, then placeholder columns, speaker
at column 9, and the coreference column last. Same-cluster bracket nesting
is resolved LIFO (innermost close matches the most recent open), so spans
of one cluster may nest but not cross.
"""

from __future__ import annotations

import re
from typing import IO, Iterable, Optional, Union

from corefkit.corpus import Corpus, DatasetProfile, Document, Span

_BEGIN_RE = re.compile(r"#begin document \((?P<id>.*)\); part (?P<part>\d+)\s*$")
_COREF_ITEM_RE = re.compile(r"\((\d+)\)|\((\d+)|(\d+)\)")


class ConllParseError(ValueError):
    def __init__(self, message: str, lineno: int):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class ConllSerializeError(ValueError):
    pass


def _parse_coref_column(
    column: str,
    token_index: int,
    lineno: int,
    open_stacks: dict[int, list[int]],
    spans_by_cluster: dict[int, list[Span]],
) -> None:
    if column == "-":
        return
    for item in column.split("|"):
        m = _COREF_ITEM_RE.fullmatch(item)
        if m is None:
            raise ConllParseError(f"bad coreference item {item!r}", lineno)
        whole, opened, closed = m.groups()
        if whole is not None:
            cid = int(whole)
            spans_by_cluster.setdefault(cid, []).append(
                Span(token_index, token_index)
            )
        elif opened is not None:
            cid = int(opened)
            open_stacks.setdefault(cid, []).append(token_index)
        else:
            cid = int(closed)
            stack = open_stacks.get(cid)
            if not stack:
                raise ConllParseError(
                    f"close bracket for cluster {cid} with no open bracket", lineno
                )
            start = stack.pop()
            spans_by_cluster.setdefault(cid, []).append(Span(start, token_index))


def parse_conll(
    source: Union[str, IO[str], Iterable[str]],
    profile: Optional[DatasetProfile] = None,
    split: str = "test",
) -> Corpus:
    """Parse a CoNLL coreference stream into a Corpus.

    ``source`` may be a string, an open text file, or an iterable of lines.
    Rows need at least 2 whitespace-separated columns; the word is taken
    from column 3 when a row has 4+ columns (the CoNLL-2012 layout) and
    from column 0 otherwise. The speaker lives at column 9 in rows of 10+
    columns.
    """
    if profile is None:
        profile = DatasetProfile(name="conll")
    if isinstance(source, str):
        lines = source.splitlines()
    else:
        lines = (line.rstrip("\n") for line in source)

    documents: list[Document] = []
    in_doc = False
    doc_key = ""
    tokens: list[str] = []
    boundaries: list[int] = []
    speakers: list[str] = []
    any_speaker = False
    sentence_open = False
    open_stacks: dict[int, list[int]] = {}
    spans_by_cluster: dict[int, list[Span]] = {}
    lineno = 0

    def finish_document(lineno: int) -> None:
        nonlocal in_doc, sentence_open
        for cid, stack in open_stacks.items():
            if stack:
                raise ConllParseError(
                    f"unbalanced brackets: cluster {cid} opened at token "
                    f"{stack[-1]} never closed",
                    lineno,
                )
        clusters = tuple(
            frozenset(spans_by_cluster[cid]) for cid in sorted(spans_by_cluster)
        )
        documents.append(
            Document(
                doc_key=doc_key,
                tokens=tuple(tokens),
                sentence_boundaries=tuple(boundaries),
                speakers=tuple(speakers) if any_speaker else None,
                genre=None,
                clusters=clusters,
                dataset_tag=profile.name,
            )
        )
        in_doc = False
        sentence_open = False

    for raw in lines:
        lineno += 1
        line = raw.rstrip()
        begin = _BEGIN_RE.match(line)
        if begin:
            if in_doc:
                raise ConllParseError("nested #begin document", lineno)
            in_doc = True
            doc_key = f"{begin.group('id')}_{int(begin.group('part'))}"
            tokens, boundaries, speakers = [], [], []
            any_speaker = False
            sentence_open = False
            open_stacks, spans_by_cluster = {}, {}
            continue
        if line.startswith("#end document"):
            if not in_doc:
                raise ConllParseError("#end document outside a document", lineno)
            finish_document(lineno)
            continue
        if not in_doc:
            if line and not line.startswith("#"):
                raise ConllParseError("token row outside a document", lineno)
            continue
        if not line:
            sentence_open = False
            continue
        if line.startswith("#"):
            continue

        columns = line.split()
        if len(columns) < 2:
            raise ConllParseError("row needs at least word and coref columns", lineno)
        word = columns[3] if len(columns) >= 4 else columns[0]
        speaker = columns[9] if len(columns) >= 10 else "-"
        if not sentence_open:
            boundaries.append(len(tokens))
            sentence_open = True
        token_index = len(tokens)
        tokens.append(word)
        speakers.append(speaker)
        if speaker != "-":
            any_speaker = True
        _parse_coref_column(
            columns[-1], token_index, lineno, open_stacks, spans_by_cluster
        )

    if in_doc:
        raise ConllParseError("missing #end document", lineno)
    return Corpus(profile=profile, documents=tuple(documents), split=split)


def _doc_key_to_id_part(doc_key: str) -> tuple[str, int]:
    base, sep, suffix = doc_key.rpartition("_")
    if sep and suffix.isdigit():
        return base, int(suffix)
    return doc_key, 0


def _coref_column(doc: Document, token_index: int, by_token) -> str:
    closes, opens, singles = by_token.get(token_index, ([], [], []))
    items = (
        [f"{cid})" for cid, _ in closes]
        + [f"({cid}" for cid, _ in opens]
        + [f"({cid})" for cid in singles]
    )
    return "|".join(items) if items else "-"


def serialize_conll(corpus: Corpus) -> str:
    """Serialize a corpus; parse_conll(serialize_conll(c)) is structurally
    equal to c for documents with canonical ``<id>_<part>`` keys, no genre,
    whitespace-free tokens/speakers, and no crossing spans within a cluster.
    """
    out: list[str] = []
    for doc in corpus.documents:
        for tok in doc.tokens:
            if not tok or any(ch.isspace() for ch in tok):
                raise ConllSerializeError(
                    f"{doc.doc_key}: token {tok!r} cannot be written as a column"
                )
        if doc.speakers is not None:
            for spk in doc.speakers:
                if not spk or any(ch.isspace() for ch in spk):
                    raise ConllSerializeError(
                        f"{doc.doc_key}: speaker {spk!r} cannot be written as a column"
                    )

        # closes before opens keeps LIFO matching consistent when a span
        # ends where another of the same cluster begins
        by_token: dict[int, tuple[list, list, list]] = {}

        def slot(i: int):
            return by_token.setdefault(i, ([], [], []))

        for cid, cluster in enumerate(doc.clusters):
            for span in sorted(cluster):
                if span.start == span.end:
                    slot(span.start)[2].append(cid)
                else:
                    slot(span.start)[1].append((cid, span.end))
                    slot(span.end)[0].append((cid, span.start))
        for closes, opens, singles in by_token.values():
            closes.sort(key=lambda item: (-item[1], item[0]))
            opens.sort(key=lambda item: (-item[1], item[0]))
            singles.sort()

        doc_id, part = _doc_key_to_id_part(doc.doc_key)
        out.append(f"#begin document ({doc_id}); part {part:03d}")
        for sentence_start, sentence in zip(
            doc.sentence_boundaries or ([0] if doc.tokens else []),
            doc.sentences(),
        ):
            for offset, word in enumerate(sentence):
                i = sentence_start + offset
                speaker = doc.speakers[i] if doc.speakers is not None else "-"
                out.append(
                    " ".join(
                        [
                            doc_id,
                            str(part),
                            str(offset),
                            word,
                            "-",
                            "*",
                            "-",
                            "-",
                            "-",
                            speaker,
                            "*",
                            _coref_column(doc, i, by_token),
                        ]
                    )
                )
            out.append("")
        out.append("#end document")
    return "\n".join(out) + "\n" if out else ""
