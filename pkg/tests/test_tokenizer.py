import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from emoxgen.errors import ContractError, DataError
from emoxgen.tokenizer import CLS, PAD, SEP, SPECIALS, UNK, Vocab, decode, encode, pre_tokenize, train_vocab

CORPUS = [
    "the quick brown fox jumps over the lazy dog",
    "those people are awful, truly awful!",
    "I can't believe it's already october",
    "numbers like 42 and 1999 appear too",
    "quickly, quicker, quickest",
] * 3


@pytest.fixture(scope="module")
def vocab():
    return train_vocab(CORPUS, 300)


class TestTrainVocab:
    def test_specials_first(self, vocab):
        assert tuple(vocab.tokens[:4]) == SPECIALS
        assert (PAD, UNK, CLS, SEP) == (0, 1, 2, 3)

    def test_repeated_word_is_one_token(self):
        v = train_vocab(["hatespeech"] * 50, 300)
        assert encode("hatespeech", v) == [CLS, v.ids["hatespeech"], SEP]

    def test_deterministic(self):
        assert train_vocab(CORPUS, 300).tokens == train_vocab(CORPUS, 300).tokens

    def test_size_bound(self, vocab):
        assert len(vocab) <= 300
        assert len(set(vocab.tokens)) == len(vocab)

    def test_every_corpus_character_encodable(self, vocab):
        for text in CORPUS:
            assert UNK not in encode(text, vocab, max_len=512)

    def test_too_small(self):
        with pytest.raises(ContractError):
            train_vocab(CORPUS, 10)

    def test_empty_corpus(self):
        with pytest.raises(DataError):
            train_vocab(["", "   "], 300)

    def test_save_load(self, vocab, tmp_path):
        path = tmp_path / "vocab.txt"
        vocab.save(path)
        assert Vocab.load(path).tokens == vocab.tokens
        assert path.read_text(encoding="utf-8").splitlines() == vocab.tokens

    def test_bad_specials(self):
        with pytest.raises(ContractError):
            Vocab(["a", "b", "c", "d"])


class TestEncode:
    def test_empty(self, vocab):
        assert encode("", vocab) == [CLS, SEP]

    def test_unknown_character(self, vocab):
        assert encode("€", vocab) == [CLS, UNK, SEP]

    def test_round_trip(self, vocab):
        for text in CORPUS:
            assert decode(encode(text, vocab, 512), vocab) == " ".join(pre_tokenize(text))

    def test_bad_max_len(self, vocab):
        with pytest.raises(ContractError):
            encode("x", vocab, max_len=1)

    @settings(max_examples=200, deadline=None)
    @given(text=st.text(max_size=200), max_len=st.integers(2, 40))
    def test_length_bound(self, vocab, text, max_len):
        ids = encode(text, vocab, max_len)
        assert 2 <= len(ids) <= max_len
        assert ids[0] == CLS and ids[-1] == SEP
        assert all(0 <= i < len(vocab) for i in ids)

    @settings(max_examples=200, deadline=None)
    @given(words=st.lists(st.sampled_from(sorted({w for t in CORPUS for w in pre_tokenize(t)})), max_size=20))
    def test_round_trip_property(self, vocab, words):
        text = " ".join(words)
        assert decode(encode(text, vocab, 512), vocab) == " ".join(pre_tokenize(text))
