"""Text cleaning pipeline.

Order matters and is fixed: URL-title extraction, lowercasing, non-ASCII
stripping, sentence counting, hashtag counting, punctuation counting and
removal (apostrophes survive inside words), whitespace tokenization.
"""

from __future__ import annotations

import re
import string
from dataclasses import dataclass, field

from .corpus import LabeledMessage


class PreprocessError(Exception):
    pass


_URL = re.compile(r"(?P<lead>\s*)(?P<url>https?://\S+)", re.IGNORECASE)
_TERMINATORS = re.compile(r"[.!?]+")
_HASHTAG = re.compile(r"#(?=[a-z0-9])")
_ALNUM = set(string.ascii_lowercase + string.digits)


@dataclass(frozen=True)
class CleanMessage:
    """Tokenized message plus the counts consumed by feature extraction.

    `pattern_text` is the lowercased ASCII text before punctuation removal;
    symbol lexicons (which need intact parentheses etc.) match against it.
    """

    id: str
    tokens: tuple[str, ...]
    sentence_count: int
    punct_count: int
    hashtag_count: int
    char_count_original: int
    pattern_text: str = field(default="", repr=False)


def _slug_words(url: str) -> str:
    after_scheme = url.split("://", 1)[1]
    slash = after_scheme.find("/")
    if slash < 0:
        return ""
    path = after_scheme[slash + 1 :]
    last = path.rfind("/")
    if last < 0:
        return ""
    slug = path[:last].lower()
    slug = re.sub(r"[-_/+]", " ", slug)
    slug = re.sub(r"[^a-z0-9 ]", "", slug)
    return " ".join(slug.split())


def extract_url_titles(text: str) -> str:
    """Replace each URL with the words of its path slug.

    The leading domain segment (everything up to the first '/') is dropped
    and the slug is what precedes the final '/'. Shorteners and bare
    domains have no such slug and vanish entirely.
    """

    def repl(m: re.Match) -> str:
        words = _slug_words(m.group("url"))
        if not words:
            return ""
        return m.group("lead") + words

    return _URL.sub(repl, text)


def is_viable(raw_text: str) -> bool:
    """Messages with fewer than 2 words or fewer than 5 characters are dropped,
    as is anything left letterless once URLs are removed."""
    if len(raw_text.split()) < 2 or len(raw_text) < 5:
        return False
    without_urls = re.sub(r"https?://\S+", " ", raw_text, flags=re.IGNORECASE)
    return any(c in string.ascii_letters for c in without_urls)


def clean_text(msg: LabeledMessage) -> CleanMessage:
    """Run the full cleaning pipeline on one message.

    Raises PreprocessError if no tokens survive; callers drop the message.
    """
    text = extract_url_titles(msg.raw_text)
    text = text.lower()
    text = "".join(ch for ch in text if ch.isascii())

    sentence_count = len(_TERMINATORS.findall(text)) or 1
    hashtag_count = len(_HASHTAG.findall(text))

    out: list[str] = []
    punct = 0
    for i, ch in enumerate(text):
        if ch in _ALNUM or ch.isspace():
            out.append(ch)
        elif ch == "'":
            inner = (
                i > 0
                and i + 1 < len(text)
                and text[i - 1] in _ALNUM
                and text[i + 1] in _ALNUM
            )
            if inner:
                out.append(ch)
            else:
                punct += 1
        else:
            punct += 1
            out.append(" ")
    tokens = tuple("".join(out).split())
    if not tokens:
        raise PreprocessError(f"message {msg.id!r}: no tokens survive cleaning")
    return CleanMessage(
        id=msg.id,
        tokens=tokens,
        sentence_count=sentence_count,
        punct_count=punct,
        hashtag_count=hashtag_count,
        char_count_original=len(msg.raw_text),
        pattern_text=text,
    )
