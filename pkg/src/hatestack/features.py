"""Dictionary, syntactic, and log-odds features.

Everything here is deterministic given the message and the loaded
resources. The packaged lexicons are synthetic stand-ins (invented group
names, sci-fi swears); production users point `load_resources` at their
own files in the same formats.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources as importlib_resources
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from .corpus import SeverityLabel
from .preprocess import CleanMessage
from .util import sha256_text


class FeatureError(Exception):
    pass


FEATURE_NAMES = (
    "hate_term_count",
    "hate_severity_sum",
    "hate_symbol_count",
    "obscenity_count",
    "othering_pair_count",
    "sentiment",
    "word_count",
    "sentence_count",
    "punct_count",
    "pronoun_count",
    "negation_count",
    "lexical_density",
    "flesch_reading_ease",
    "log_odds_clean",
    "log_odds_offensive",
    "log_odds_hate",
)
BASE_FEATURE_NAMES = FEATURE_NAMES[:13]
N_BASE_FEATURES = len(BASE_FEATURE_NAMES)


@dataclass(frozen=True)
class FeatureRecord:
    hate_term_count: float
    hate_severity_sum: float
    hate_symbol_count: float
    obscenity_count: float
    othering_pair_count: float
    sentiment: float
    word_count: float
    sentence_count: float
    punct_count: float
    pronoun_count: float
    negation_count: float
    lexical_density: float
    flesch_reading_ease: float
    log_odds_clean: float
    log_odds_offensive: float
    log_odds_hate: float

    def to_vector(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in FEATURE_NAMES], dtype=np.float64)


@dataclass(frozen=True)
class Lexicon:
    """Term list with per-term severity and a matching mode.

    Modes: "token" matches single tokens exactly; "phrase" additionally
    matches multi-word entries against consecutive token runs; "pattern"
    matches literal substrings, with '*' in an entry standing for one word.
    """

    name: str
    entries: Mapping[str, float]
    match_mode: str = "phrase"

    def __post_init__(self):
        if self.match_mode not in ("token", "phrase", "pattern"):
            raise FeatureError(f"unknown match mode: {self.match_mode!r}")
        for term, severity in self.entries.items():
            if not term or term != term.lower():
                raise FeatureError(f"lexicon {self.name!r}: bad term {term!r}")
            if not 1.0 <= float(severity) <= 100.0:
                raise FeatureError(f"lexicon {self.name!r}: severity out of [1,100] for {term!r}")


@dataclass(frozen=True)
class PronounInventory:
    ingroup: frozenset[str]
    outgroup: frozenset[str]

    def __post_init__(self):
        if self.ingroup & self.outgroup:
            raise FeatureError("ingroup and outgroup pronoun sets must be disjoint")


def load_lexicon(path, name: str, match_mode: str = "phrase") -> Lexicon:
    """Read a UTF-8 TSV lexicon: term<TAB>severity, '#' comments, blank lines ok."""
    entries: dict[str, float] = {}
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        term = parts[0].strip().lower()
        severity = float(parts[1]) if len(parts) > 1 and parts[1].strip() else 1.0
        entries[term] = severity
    return Lexicon(name=name, entries=entries, match_mode=match_mode)


def load_wordlist(path) -> frozenset[str]:
    words = set()
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.strip().lower()
        if line and not line.startswith("#"):
            words.add(line)
    return frozenset(words)


def _load_valence(path) -> dict[str, int]:
    out: dict[str, int] = {}
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        term, sign = line.split("\t")
        out[term.strip().lower()] = 1 if int(sign) > 0 else -1
    return out


@dataclass(frozen=True)
class Resources:
    """All lexicons and word lists needed by the extractor, loaded once."""

    hate_terms: Lexicon
    hate_symbols: Lexicon
    obscenity: Lexicon
    valence: Mapping[str, int]
    stopwords: frozenset[str]
    negators: frozenset[str]
    pronouns: PronounInventory
    plural_irregular: frozenset[str]
    plural_exceptions: frozenset[str]

    def digest(self) -> str:
        """Content digest for archive manifests."""
        parts = []
        for lex in (self.hate_terms, self.hate_symbols, self.obscenity):
            parts.append(lex.name)
            parts.extend(f"{t}={lex.entries[t]}" for t in sorted(lex.entries))
        parts.extend(f"{t}={s}" for t, s in sorted(self.valence.items()))
        for words in (
            self.stopwords,
            self.negators,
            self.pronouns.ingroup,
            self.pronouns.outgroup,
            self.plural_irregular,
            self.plural_exceptions,
        ):
            parts.append("|".join(sorted(words)))
        return sha256_text("\n".join(parts))


_RESOURCE_FILES = {
    "hate_terms": ("hate_terms.tsv", "phrase"),
    "hate_symbols": ("hate_symbols.tsv", "pattern"),
    "obscenity": ("obscenity.tsv", "token"),
}


def load_resources(directory) -> Resources:
    """Load resources from a directory using the packaged file names."""
    directory = Path(directory)
    lexicons = {
        key: load_lexicon(directory / fname, name=key, match_mode=mode)
        for key, (fname, mode) in _RESOURCE_FILES.items()
    }
    return Resources(
        hate_terms=lexicons["hate_terms"],
        hate_symbols=lexicons["hate_symbols"],
        obscenity=lexicons["obscenity"],
        valence=_load_valence(directory / "valence.tsv"),
        stopwords=load_wordlist(directory / "stopwords.txt"),
        negators=load_wordlist(directory / "negators.txt"),
        pronouns=PronounInventory(
            ingroup=load_wordlist(directory / "pronouns_ingroup.txt"),
            outgroup=load_wordlist(directory / "pronouns_outgroup.txt"),
        ),
        plural_irregular=load_wordlist(directory / "plural_irregular.txt"),
        plural_exceptions=load_wordlist(directory / "plural_exceptions.txt"),
    )


_DEFAULT_RESOURCES: Resources | None = None


def default_resources() -> Resources:
    """The packaged synthetic stand-in resources (cached)."""
    global _DEFAULT_RESOURCES
    if _DEFAULT_RESOURCES is None:
        with importlib_resources.as_file(
            importlib_resources.files("hatestack") / "data"
        ) as data_dir:
            _DEFAULT_RESOURCES = load_resources(data_dir)
    return _DEFAULT_RESOURCES


def hate_lexicon_features(tokens: Sequence[str], lex: Lexicon) -> tuple[int, float]:
    """Count lexicon matches and sum their severities (with multiplicity).

    Phrase mode matches multi-word entries at every start position.
    """
    count = 0
    severity_sum = 0.0
    single = lex.entries
    if lex.match_mode == "token":
        for t in tokens:
            if t in single:
                count += 1
                severity_sum += single[t]
        return count, severity_sum
    phrases = [(tuple(term.split()), sev) for term, sev in lex.entries.items()]
    n = len(tokens)
    for phrase, sev in phrases:
        k = len(phrase)
        if k == 1:
            for t in tokens:
                if t == phrase[0]:
                    count += 1
                    severity_sum += sev
        else:
            for i in range(n - k + 1):
                if tuple(tokens[i : i + k]) == phrase:
                    count += 1
                    severity_sum += sev
    return count, severity_sum


def hate_symbol_count(pattern_text: str, symbols: Lexicon) -> int:
    """Non-overlapping symbol-pattern occurrences in pre-punctuation text."""
    text = pattern_text.lower()
    total = 0
    for term in symbols.entries:
        if "*" in term:
            pattern = re.escape(term).replace(r"\*", r"\s*\w+\s*")
            total += len(re.findall(pattern, text))
        else:
            total += text.count(term)
    return total


def obscenity_count(tokens: Sequence[str], swears: Lexicon) -> int:
    return sum(1 for t in tokens if t in swears.entries)


def othering_score(tokens: Sequence[str], inv: PronounInventory) -> tuple[bool, int]:
    """In-group/out-group pronoun co-occurrence: pair count is the product
    of the two hit counts, so it is zero exactly when one side is absent."""
    in_hits = sum(1 for t in tokens if t in inv.ingroup)
    out_hits = sum(1 for t in tokens if t in inv.outgroup)
    pairs = in_hits * out_hits
    return pairs > 0, pairs


def sentiment_polarity(
    tokens: Sequence[str], valence: Mapping[str, int], negators: frozenset[str]
) -> float:
    """Signed valence hits, flipped when negated within the 4 preceding
    tokens, normalized by sqrt(hit count) and clamped to [-1, 1]."""
    total = 0
    hits = 0
    for i, t in enumerate(tokens):
        sign = valence.get(t)
        if sign is None:
            continue
        hits += 1
        window = tokens[max(0, i - 4) : i]
        if any(w in negators for w in window):
            sign = -sign
        total += sign
    if hits == 0:
        return 0.0
    return float(np.clip(total / np.sqrt(hits), -1.0, 1.0))


_VOWEL_GROUPS = re.compile(r"[aeiouy]+")


def syllable_count(word: str) -> int:
    """Maximal vowel groups, minus one for a terminal silent 'e', never below 1."""
    groups = len(_VOWEL_GROUPS.findall(word))
    if word.endswith("e") and groups > 1:
        groups -= 1
    return max(groups, 1)


def syntactic_features(
    cm: CleanMessage,
    stopwords: frozenset[str],
    pronouns: PronounInventory,
    negators: frozenset[str],
) -> dict[str, float]:
    """Counts plus lexical density and Flesch reading ease for one message."""
    tokens = cm.tokens
    if not tokens:
        raise FeatureError(f"message {cm.id!r} has no tokens")
    words = len(tokens)
    content = sum(1 for t in tokens if t not in stopwords)
    syllables = sum(syllable_count(t) for t in tokens)
    flesch = 206.835 - 1.015 * (words / cm.sentence_count) - 84.6 * (syllables / words)
    pronoun_hits = sum(1 for t in tokens if t in pronouns.ingroup or t in pronouns.outgroup)
    return {
        "word_count": float(words),
        "sentence_count": float(cm.sentence_count),
        "punct_count": float(cm.punct_count),
        "pronoun_count": float(pronoun_hits),
        "negation_count": float(sum(1 for t in tokens if t in negators)),
        "lexical_density": content / words,
        "flesch_reading_ease": flesch,
    }


def plural_nouns(
    tokens: Sequence[str],
    tagger: Callable[[Sequence[str]], list[str]] | None = None,
    *,
    irregular: frozenset[str] = frozenset(),
    exceptions: frozenset[str] = frozenset(),
) -> list[str]:
    """Plural-noun candidates, via an external tagger when supplied.

    The default heuristic keeps s-but-not-ss endings outside the exception
    list, plus known irregular plurals. Deliberately coarse; part-of-speech
    tagging is pluggable precisely because this is replaceable plumbing.
    """
    if tagger is not None:
        return tagger(tokens)
    out = []
    for t in tokens:
        if t in irregular:
            out.append(t)
        elif (
            len(t) >= 3
            and t.endswith("s")
            and not t.endswith("ss")
            and "'" not in t
            and t not in exceptions
        ):
            out.append(t)
    return out


@dataclass(frozen=True)
class LogOddsModel:
    """Z-scored weighted log-odds (informative Dirichlet prior) per class.

    Vocabulary is the plural nouns seen while fitting; nouns outside it
    contribute nothing at feature time.
    """

    vocab: tuple[str, ...]
    z: np.ndarray  # (len(vocab), 3)
    prior_scale: float

    def __post_init__(self):
        object.__setattr__(self, "_index", {w: i for i, w in enumerate(self.vocab)})

    def zscores(self, noun: str) -> np.ndarray | None:
        i = self._index.get(noun)
        return None if i is None else self.z[i]


def fit_weighted_log_odds(
    train: Sequence[tuple[Sequence[str], SeverityLabel | int]],
    prior_scale: float = 1.0,
) -> LogOddsModel:
    """Fit each-class-vs-rest weighted log-odds over plural-noun counts.

    The Dirichlet prior for word w is proportional to its corpus-wide
    frequency, scaled so the priors sum to `prior_scale`; the z-score is
    the log-odds-ratio over its approximate standard deviation.
    """
    if prior_scale <= 0:
        raise FeatureError("prior_scale must be positive")
    counts: dict[str, np.ndarray] = {}
    for nouns, label in train:
        c = int(label)
        for w in nouns:
            if w not in counts:
                counts[w] = np.zeros(3, dtype=np.float64)
            counts[w][c] += 1.0
    vocab = tuple(sorted(counts))
    if not vocab:
        return LogOddsModel(vocab=(), z=np.zeros((0, 3)), prior_scale=prior_scale)
    y = np.stack([counts[w] for w in vocab])  # (V, 3)
    y_w = y.sum(axis=1)  # corpus-wide count per word
    n_i = y.sum(axis=0)  # token count per class
    n = float(y_w.sum())
    alpha = prior_scale * y_w / n
    alpha0 = float(prior_scale)
    z = np.zeros_like(y)
    with np.errstate(divide="ignore", invalid="ignore"):
        for i in range(3):
            yi = y[:, i]
            log_in = np.log((yi + alpha) / (n_i[i] + alpha0 - yi - alpha))
            rest = y_w - yi
            log_rest = np.log((rest + alpha) / (n - n_i[i] + alpha0 - rest - alpha))
            delta = log_in - log_rest
            var = 1.0 / (yi + alpha) + 1.0 / (rest + alpha)
            z[:, i] = delta / np.sqrt(var)
    # Degenerate corpora (e.g. a single word) can produce non-finite
    # ratios; clamp so downstream features stay finite.
    z = np.nan_to_num(z, nan=0.0, posinf=1e6, neginf=-1e6)
    return LogOddsModel(vocab=vocab, z=z, prior_scale=prior_scale)


def log_odds_features(nouns: Sequence[str], model: LogOddsModel) -> np.ndarray:
    """Per-class sums of z-scores over the message's in-vocabulary nouns."""
    total = np.zeros(3, dtype=np.float64)
    for w in nouns:
        scores = model.zscores(w)
        if scores is not None:
            total += scores
    return total


def extract_base_features(cm: CleanMessage, res: Resources) -> np.ndarray:
    """The 13 non-log-odds features, in FEATURE_NAMES order."""
    count, severity = hate_lexicon_features(cm.tokens, res.hate_terms)
    _, pairs = othering_score(cm.tokens, res.pronouns)
    syn = syntactic_features(cm, res.stopwords, res.pronouns, res.negators)
    values = (
        float(count),
        severity,
        float(hate_symbol_count(cm.pattern_text, res.hate_symbols)),
        float(obscenity_count(cm.tokens, res.obscenity)),
        float(pairs),
        sentiment_polarity(cm.tokens, res.valence, res.negators),
        syn["word_count"],
        syn["sentence_count"],
        syn["punct_count"],
        syn["pronoun_count"],
        syn["negation_count"],
        syn["lexical_density"],
        syn["flesch_reading_ease"],
    )
    return np.array(values, dtype=np.float64)


def extract_record(cm: CleanMessage, res: Resources, log_odds: LogOddsModel) -> FeatureRecord:
    """Full 16-field feature record for one message."""
    base = extract_base_features(cm, res)
    nouns = plural_nouns(
        cm.tokens, irregular=res.plural_irregular, exceptions=res.plural_exceptions
    )
    lo = log_odds_features(nouns, log_odds)
    return FeatureRecord(*base.tolist(), *lo.tolist())
