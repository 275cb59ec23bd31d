"""Seeded synthetic multi-platform corpus generator.

Stands in for non-distributable labeled datasets in tests and demos.
Hate-class messages carry slur surrogates (invented group names from the
packaged lexicon), platform-local coded terms, and in-group/out-group
pronoun pairs; offensive messages carry swear surrogates without group
targets. Platform marker vocabularies are disjoint, which guarantees the
cross-platform distribution shift a stacking ensemble is meant to
exploit. All tokens are harmless inventions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .corpus import Dataset, LabeledMessage, SeverityLabel
from .util import rng_for


class SynthError(Exception):
    pass


CORE_VOCAB = (
    "the", "a", "and", "to", "of", "in", "it", "was", "day", "today",
    "went", "saw", "made", "time", "home", "work", "game", "team", "news",
    "street", "garden", "coffee", "morning", "evening", "weather", "rain",
    "sun", "book", "film", "music", "dinner", "bread", "market", "train",
    "city", "river", "walk", "long", "short", "new", "old", "really",
    "about", "after", "before", "again", "still", "around", "people",
)

CLEAN_PLURALS = ("gardens", "recipes", "songs", "rivers", "mornings", "puzzles", "bicycles", "markets")
POSITIVE_WORDS = ("good", "great", "nice", "happy", "love", "wonderful", "fine", "enjoy")
NEGATIVE_WORDS = ("bad", "awful", "terrible", "horrible", "worst", "nasty", "disgusting", "stupid")
SWEAR_WORDS = ("frak", "smeg", "gorram", "drokk", "felgercarb", "spug", "shazbot")
INGROUP = ("we", "us", "our")
OUTGROUP = ("they", "them", "their")


@dataclass(frozen=True)
class PlatformProfile:
    """Token-distribution parameters for one simulated platform."""

    platform: str
    class_mix: tuple[float, float, float]  # clean, offensive, hate
    marker_vocab: tuple[str, ...]  # platform-specific filler, disjoint across profiles
    slur_vocab: tuple[str, ...]  # surrogates present in the packaged hate lexicon
    coded_vocab: tuple[str, ...]  # platform-local coded terms, absent from lexicons
    length_range: tuple[int, int] = (8, 26)
    hashtag_rate: float = 0.05
    hate_signal_prob: float = 0.9
    # How hate-class signal splits between lexicon slurs (shared across
    # platforms), platform-local coded terms, and othering pronoun pairs.
    signal_split: tuple[float, float, float] = (0.45, 0.30, 0.25)

    def __post_init__(self):
        # Published class balances are rounded to 2 decimals and can sum to
        # 1.01; tolerate that and renormalize at sampling time.
        if abs(sum(self.class_mix) - 1.0) > 0.02:
            raise SynthError(f"profile {self.platform!r}: class mix must sum to ~1")
        if not (self.marker_vocab and self.slur_vocab and self.coded_vocab):
            raise SynthError(f"profile {self.platform!r}: empty vocabulary")

    @property
    def normalized_mix(self) -> np.ndarray:
        mix = np.array(self.class_mix, dtype=np.float64)
        return mix / mix.sum()


def default_profiles() -> tuple[PlatformProfile, ...]:
    """Four platforms with class mixes matching observed platform balances."""
    return (
        PlatformProfile(
            platform="facebook",
            class_mix=(0.70, 0.12, 0.18),
            marker_vocab=("wallfeed", "groupchat", "pokewave", "fbreact"),
            slur_vocab=("grexlins", "snarovians"),
            coded_vocab=("lunavites", "parzelons"),
            length_range=(8, 30),
            signal_split=(0.35, 0.45, 0.20),
        ),
        PlatformProfile(
            platform="gab",
            class_mix=(0.71, 0.13, 0.16),
            marker_vocab=("gabwave", "freespeak", "gabberline", "echofeed"),
            slur_vocab=("vorpaks", "quislorns"),
            coded_vocab=("womzeers", "hexivors"),
            length_range=(6, 24),
            signal_split=(0.35, 0.45, 0.20),
        ),
        PlatformProfile(
            platform="twitter",
            class_mix=(0.43, 0.43, 0.14),
            marker_vocab=("retweetish", "subtweet", "dmthread", "quotepost"),
            slur_vocab=("drazemites", "klorveks"),
            coded_vocab=("zenkarts", "bruvnaks"),
            length_range=(4, 16),
            hashtag_rate=0.5,
            signal_split=(0.35, 0.45, 0.20),
        ),
        PlatformProfile(
            platform="stormfront",
            class_mix=(0.87, 0.04, 0.10),
            marker_vocab=("forumthread", "stormpost", "boardreply", "threadlore"),
            slur_vocab=("benthorks", "muxalites"),
            coded_vocab=("taxivons", "gorlims"),
            length_range=(12, 40),
            # Small forum, little training data: its hate leans on explicit
            # lexicon slurs a dictionary feature catches without learning,
            # while the big platforms above lean on their own coded terms.
            hate_signal_prob=0.95,
            signal_split=(0.55, 0.20, 0.25),
        ),
    )


def reddit_profile() -> PlatformProfile:
    """A fifth platform for add-a-platform workflows."""
    return PlatformProfile(
        platform="reddit",
        class_mix=(0.75, 0.10, 0.15),
        marker_vocab=("upvotely", "subthread", "crosspost", "modqueue"),
        slur_vocab=("pilvorts", "crenshals"),
        coded_vocab=("welkinors", "dustrels"),
        length_range=(8, 28),
        # Hate here leans on platform-local coded terms, so models that
        # never saw this platform miss much of it.
        signal_split=(0.15, 0.60, 0.25),
    )


def _insert(words: list[str], token: str, rng: np.random.Generator) -> None:
    words.insert(int(rng.integers(len(words) + 1)), token)


def _compose(profile: PlatformProfile, label: SeverityLabel, rng: np.random.Generator) -> str:
    lo, hi = profile.length_range
    words = [str(w) for w in rng.choice(CORE_VOCAB, size=int(rng.integers(lo, hi + 1)))]
    for marker in rng.choice(profile.marker_vocab, size=1 + int(rng.integers(3))):
        _insert(words, str(marker), rng)

    if label == SeverityLabel.CLEAN:
        if rng.random() < 0.55:
            _insert(words, str(rng.choice(POSITIVE_WORDS)), rng)
        if rng.random() < 0.45:
            _insert(words, str(rng.choice(CLEAN_PLURALS)), rng)
        if rng.random() < 0.15:
            _insert(words, str(rng.choice(NEGATIVE_WORDS)), rng)
        if rng.random() < 0.15:
            _insert(words, str(rng.choice(INGROUP)), rng)
        if rng.random() < 0.03:
            _insert(words, str(rng.choice(SWEAR_WORDS)), rng)
    elif label == SeverityLabel.OFFENSIVE:
        if rng.random() < 0.95:
            for _ in range(1 + int(rng.random() < 0.4)):
                _insert(words, str(rng.choice(SWEAR_WORDS)), rng)
        if rng.random() < 0.5:
            _insert(words, str(rng.choice(NEGATIVE_WORDS)), rng)
        if rng.random() < 0.4:
            _insert(words, "you", rng)
        if rng.random() < 0.3:
            _insert(words, str(rng.choice(CLEAN_PLURALS)), rng)
    else:
        split = np.array(profile.signal_split, dtype=np.float64)
        split = split / split.sum()
        if rng.random() < profile.hate_signal_prob:
            primary = rng.random()
            if primary < split[0]:
                _insert(words, str(rng.choice(profile.slur_vocab)), rng)
            elif primary < split[0] + split[1]:
                _insert(words, str(rng.choice(profile.coded_vocab)), rng)
            else:
                _insert(words, str(rng.choice(INGROUP)), rng)
                _insert(words, str(rng.choice(OUTGROUP)), rng)
        if rng.random() < 0.7 * split[0]:
            _insert(words, str(rng.choice(profile.slur_vocab)), rng)
        if rng.random() < 0.7 * split[1]:
            _insert(words, str(rng.choice(profile.coded_vocab)), rng)
        if rng.random() < 0.45:
            _insert(words, str(rng.choice(INGROUP)), rng)
            _insert(words, str(rng.choice(OUTGROUP)), rng)
        if rng.random() < 0.35:
            _insert(words, str(rng.choice(SWEAR_WORDS)), rng)
        if rng.random() < 0.5:
            _insert(words, str(rng.choice(NEGATIVE_WORDS)), rng)

    # Surface noise: hashtags, commas, extra sentence breaks, casing.
    if rng.random() < profile.hashtag_rate:
        markers = [i for i, w in enumerate(words) if w in profile.marker_vocab]
        if markers:
            i = markers[int(rng.integers(len(markers)))]
            words[i] = "#" + words[i]
    if len(words) > 6 and rng.random() < 0.4:
        words[int(rng.integers(1, len(words) - 1))] += ","
    if len(words) > 10 and rng.random() < 0.5:
        words[int(rng.integers(3, len(words) - 2))] += "."
    if rng.random() < 0.8:
        words[0] = words[0].capitalize()
    terminator = str(rng.choice((".", ".", ".", "!", "?", "...")))
    return " ".join(words) + terminator


def generate_corpus(
    profiles: Sequence[PlatformProfile], n_per_platform: int, seed: int
) -> Dataset:
    """Sample a labeled multi-platform corpus; labels are ground truth by
    construction and the draw is deterministic under (profiles, seed)."""
    if n_per_platform < 30:
        raise SynthError(f"n_per_platform must be >= 30, got {n_per_platform}")
    seen = set()
    for p in profiles:
        overlap = seen.intersection(p.marker_vocab)
        if overlap:
            raise SynthError(f"marker vocabularies overlap across profiles: {sorted(overlap)}")
        seen.update(p.marker_vocab)
    messages: list[LabeledMessage] = []
    for profile in profiles:
        rng = rng_for(seed, "synth", profile.platform)
        labels = rng.choice(3, size=n_per_platform, p=profile.normalized_mix)
        for i in range(n_per_platform):
            label = SeverityLabel(int(labels[i]))
            messages.append(
                LabeledMessage(
                    id=f"{profile.platform}-{i:05d}",
                    platform=profile.platform,
                    raw_text=_compose(profile, label, rng),
                    label=label,
                )
            )
    return Dataset(tuple(messages))


def profile_to_dict(profile: PlatformProfile) -> dict:
    return {
        "platform": profile.platform,
        "class_mix": list(profile.class_mix),
        "marker_vocab": list(profile.marker_vocab),
        "slur_vocab": list(profile.slur_vocab),
        "coded_vocab": list(profile.coded_vocab),
        "length_range": list(profile.length_range),
        "hashtag_rate": profile.hashtag_rate,
        "hate_signal_prob": profile.hate_signal_prob,
        "signal_split": list(profile.signal_split),
    }
