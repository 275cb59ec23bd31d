import pytest

from hatestack.corpus import LabeledMessage
from hatestack.preprocess import (
    PreprocessError,
    clean_text,
    extract_url_titles,
    is_viable,
)


def msg(text, msg_id="m1"):
    return LabeledMessage(id=msg_id, platform="p", raw_text=text)


class TestViability:
    @pytest.mark.parametrize(
        "text,expected",
        [
            ("ok", False),  # one word
            ("this is fine", True),
            ("a b", False),  # 3 characters
            ("it is", True),
            ("https://a.io/x https://b.io/y", False),  # nothing but URLs
        ],
    )
    def test_rules(self, text, expected):
        assert is_viable(text) is expected


class TestUrlTitles:
    def test_paper_example_exact(self):
        url = "https://dailystormer.ws/britain-to-give-houses-and-jobs-to-returning-isis-fighters/"
        assert extract_url_titles(url) == "britain to give houses and jobs to returning isis fighters"

    def test_shortener_yields_nothing(self):
        assert extract_url_titles("see https://bit.ly/x4 now") == "see now"

    def test_bare_domain(self):
        assert extract_url_titles("go https://example.com please") == "go please"

    def test_identity_without_links(self):
        assert extract_url_titles("no links here") == "no links here"

    def test_multi_segment_path(self):
        assert extract_url_titles("https://site.org/news/big-story_here/") == "news big story here"

    def test_replacement_alphabet(self):
        out = extract_url_titles("x https://site.org/Some-Title%20Here/ y")
        assert set(out) <= set("abcdefghijklmnopqrstuvwxyz0123456789 ")


class TestCleanText:
    def test_hello_world(self):
        cm = clean_text(msg("Hello, World!"))
        assert cm.tokens == ("hello", "world")
        assert cm.punct_count == 2
        assert cm.sentence_count == 1

    def test_hashtag_keyword_retained(self):
        cm = clean_text(msg("#Brexit means Brexit"))
        assert cm.tokens == ("brexit", "means", "brexit")
        assert cm.hashtag_count == 1

    def test_non_ascii_stripped(self):
        cm = clean_text(msg("Çà va bien"))
        assert cm.tokens == ("va", "bien")

    def test_contraction_kept_as_one_token(self):
        cm = clean_text(msg("I don't know"))
        assert "don't" in cm.tokens

    def test_quoting_apostrophes_removed(self):
        cm = clean_text(msg("he said 'hello there' loudly"))
        assert cm.tokens == ("he", "said", "hello", "there", "loudly")
        assert cm.punct_count == 2

    def test_sentence_count_from_terminators(self):
        cm = clean_text(msg("First one. Second!! Third?"))
        assert cm.sentence_count == 3

    def test_no_terminator_counts_one_sentence(self):
        assert clean_text(msg("just words here")).sentence_count == 1

    def test_char_count_original(self):
        text = "Hello, World!"
        assert clean_text(msg(text)).char_count_original == len(text)

    def test_zero_tokens_is_error(self):
        with pytest.raises(PreprocessError):
            clean_text(msg("¡¡ ¿¿ üü"))

    def test_idempotent_on_own_output(self):
        for text in [
            "Hello, World! How are you?",
            "#Tag one don't STOP... もう http://x.yz/a-b/",
            "mixed CASE with 'quotes' and don't",
        ]:
            cm = clean_text(msg(text))
            again = clean_text(msg(" ".join(cm.tokens)))
            assert again.tokens == cm.tokens

    def test_punct_count_accounts_for_removed_glyphs(self):
        text = "a, b! c? (d) 'e' f's"
        cm = clean_text(msg(text))
        # , ! ? ( ) and the two quoting apostrophes; the possessive survives
        assert cm.punct_count == 7

    def test_pattern_text_keeps_punctuation(self):
        cm = clean_text(msg("The (((echo))) thing"))
        assert "(((echo)))" in cm.pattern_text
        assert cm.tokens == ("the", "echo", "thing")
