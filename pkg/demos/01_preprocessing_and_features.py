"""Walk through the text-cleaning pipeline and the per-message features.

Run:  python3 demos/01_preprocessing_and_features.py
"""

from hatestack.corpus import LabeledMessage, SeverityLabel
from hatestack.features import (
    default_resources,
    extract_record,
    fit_weighted_log_odds,
    plural_nouns,
)
from hatestack.preprocess import clean_text, extract_url_titles, is_viable

resources = default_resources()

# --- Viability: short or letterless messages never enter the pipeline.
for text in ["ok", "this is fine", "a b"]:
    print(f"viable({text!r}) = {is_viable(text)}")

# --- URLs are replaced by the readable words of their path slug.
url = "https://dailystormer.ws/britain-to-give-houses-and-jobs-to-returning-isis-fighters/"
print("\nURL slug:", extract_url_titles(url))
print("shortener:", repr(extract_url_titles("see https://bit.ly/x4 now")))

# --- Cleaning: lowercase, strip non-ASCII, count sentences/punctuation,
#     keep hashtag keywords, keep apostrophes inside words.
message = LabeledMessage(
    id="demo-1",
    platform="demo",
    raw_text="They don't care! #Shame — the grexlins took our gardens...",
    label=SeverityLabel.HATE,
)
cm = clean_text(message)
print("\ntokens:", cm.tokens)
print("sentences:", cm.sentence_count, "punct:", cm.punct_count, "hashtags:", cm.hashtag_count)

# --- A tiny log-odds model over plural nouns from a toy labeled sample.
sample = [
    (["gardens", "recipes"], SeverityLabel.CLEAN),
    (["gardens"], SeverityLabel.CLEAN),
    (["grexlins"], SeverityLabel.HATE),
    (["grexlins", "gardens"], SeverityLabel.HATE),
    (["songs"], SeverityLabel.OFFENSIVE),
]
log_odds = fit_weighted_log_odds(sample)
for noun in ("gardens", "grexlins"):
    z = log_odds.zscores(noun)
    print(f"log-odds z for {noun!r}: clean={z[0]:+.2f} offensive={z[1]:+.2f} hate={z[2]:+.2f}")

# --- The full 16-field feature record for the demo message.
record = extract_record(cm, resources, log_odds)
print("\nfeature record:")
for name, value in zip(record.__dataclass_fields__, record.to_vector()):
    print(f"  {name:<22} {value:+.3f}")

print("\nplural nouns seen:", plural_nouns(
    cm.tokens,
    irregular=resources.plural_irregular,
    exceptions=resources.plural_exceptions,
))
