import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lcmteval.errors import EmptyCorpus, EmptySet, ZeroLengthHypothesisCorpus
from lcmteval.metrics import (
    CHARACTER,
    WHITESPACE,
    BleuScore,
    LengthRecord,
    bleu_star,
    corpus_bleu,
    expected_length,
    length_deviation,
    rouge_l,
    rouge_n,
    round_half_up,
    scheme_for_direction,
    tokenize,
)

from .oracles import clipped_ngram_overlap, lcs_length_recursive

tokens = st.lists(st.sampled_from("abcdefg"), min_size=0, max_size=20)


def tok(words, scheme=WHITESPACE):
    return tokenize(" ".join(words), scheme)


class TestTokenize:
    def test_character_scheme_chinese(self):
        assert tokenize("明天下雨", CHARACTER).tokens == ("明", "天", "下", "雨")

    def test_empty_text(self):
        assert tokenize("", CHARACTER).tokens == ()
        assert tokenize("", WHITESPACE).tokens == ()

    def test_whitespace_collapse(self):
        assert tokenize("a  b", WHITESPACE).tokens == ("a", "b")

    def test_character_scheme_drops_whitespace(self):
        assert tokenize("a b\tc", CHARACTER).tokens == ("a", "b", "c")

    @given(st.text(alphabet="abc 明天\t", max_size=30))
    def test_character_tokens_are_single_scalars(self, text):
        seq = tokenize(text, CHARACTER)
        assert all(len(t) == 1 and not t.isspace() for t in seq.tokens)

    @given(st.lists(st.text(alphabet="abcde", min_size=1, max_size=5), max_size=8))
    def test_whitespace_retokenization_idempotent(self, words):
        once = tokenize(" ".join(words), WHITESPACE)
        again = tokenize(" ".join(once.tokens), WHITESPACE)
        assert once.tokens == again.tokens

    def test_scheme_per_direction(self):
        assert scheme_for_direction("en-zh") == CHARACTER
        assert scheme_for_direction("zh-en") == WHITESPACE
        assert scheme_for_direction("de-fr") == WHITESPACE


class TestCorpusBleu:
    def test_identity(self):
        seqs = [tok("the big cat sat down".split()), tok("a fine day indeed it was".split())]
        score = corpus_bleu(seqs, seqs)
        assert score.bleu == 1.0
        assert score.brevity_penalty == 1.0
        assert score.bleu_star == 1.0

    def test_no_overlap_is_zero(self):
        score = corpus_bleu([tok(["a", "b", "c", "d"])], [tok(["x", "y", "z", "w"])])
        assert score.bleu == 0.0
        assert score.precisions[0] == 0.0

    def test_hand_computed_three_token_case(self):
        # hyp "the cat sat" vs ref "the cat sat down": clipped counts by hand
        # give p1 = 3/3, p2 = 2/2, p3 = 1/1; the four-gram order has no
        # hypothesis n-grams, so p4 smooths to 1/2; bp = exp(1 - 4/3).
        score = corpus_bleu([tok(["the", "cat", "sat"])], [tok(["the", "cat", "sat", "down"])])
        assert score.precisions == (1.0, 1.0, 1.0, 0.5)
        assert score.brevity_penalty == pytest.approx(0.7165313105737893, abs=1e-15)
        assert score.bleu == pytest.approx(0.6025286104785453, abs=1e-15)
        assert bleu_star(score) == pytest.approx(0.8408964152537144, abs=1e-15)

    def test_empty_corpus(self):
        with pytest.raises(EmptyCorpus):
            corpus_bleu([], [])

    def test_zero_length_hypotheses(self):
        with pytest.raises(ZeroLengthHypothesisCorpus):
            corpus_bleu([tok([])], [tok(["a"])])

    @given(st.lists(st.tuples(tokens, tokens), min_size=1, max_size=6))
    @settings(max_examples=150)
    def test_star_dominates_bleu(self, pairs):
        hyps = [tok(h) for h, _ in pairs]
        refs = [tok(r) for _, r in pairs]
        if sum(len(h) for h in hyps) == 0:
            return
        score = corpus_bleu(hyps, refs)
        assert score.bleu_star >= score.bleu
        if score.brevity_penalty == 1.0:
            assert score.bleu_star == score.bleu
        elif score.bleu > 0.0:
            assert score.bleu_star > score.bleu

    @given(st.lists(st.tuples(tokens, tokens), min_size=2, max_size=6), st.randoms())
    @settings(max_examples=50)
    def test_pair_permutation_invariance(self, pairs, rnd):
        hyps = [tok(h) for h, _ in pairs]
        refs = [tok(r) for _, r in pairs]
        if sum(len(h) for h in hyps) == 0:
            return
        baseline = corpus_bleu(hyps, refs)
        order = list(range(len(pairs)))
        rnd.shuffle(order)
        shuffled = corpus_bleu([hyps[i] for i in order], [refs[i] for i in order])
        assert shuffled == baseline


class TestBleuStar:
    def test_bp_one_identity(self):
        score = BleuScore((1, 1, 1, 1), 1.0, 0.30, 0.30, 10, 10)
        assert bleu_star(score) == 0.30

    def test_direct_formula(self):
        score = BleuScore((1, 1, 1, 1), 0.5, 0.20, 0.40, 10, 20)
        assert bleu_star(score) == pytest.approx(0.40, abs=1e-15)

    def test_zero_bleu(self):
        score = BleuScore((0, 0, 0, 0), 0.9, 0.0, 0.0, 10, 11)
        assert bleu_star(score) == 0.0


class TestRouge:
    def test_identity(self):
        seq = tok(["a", "b", "c"])
        for score in (rouge_n(seq, seq, 1), rouge_n(seq, seq, 2), rouge_l(seq, seq)):
            assert (score.precision, score.recall, score.f1) == (1.0, 1.0, 1.0)

    def test_unigram_hand_case(self):
        score = rouge_n(tok(["the", "cat"]), tok(["the", "cat", "sat"]), 1)
        assert score.precision == 1.0
        assert score.recall == pytest.approx(2 / 3, abs=1e-15)
        assert score.f1 == pytest.approx(0.8, abs=1e-15)

    def test_disjoint_vocabulary_zeros(self):
        score = rouge_n(tok(["a", "b"]), tok(["x", "y"]), 1)
        assert (score.precision, score.recall, score.f1) == (0.0, 0.0, 0.0)

    def test_lcs_hand_case(self):
        score = rouge_l(tok(["a", "c"]), tok(["a", "b", "c"]))
        assert score.precision == 1.0
        assert score.recall == pytest.approx(2 / 3, abs=1e-15)
        assert score.f1 == pytest.approx(0.8, abs=1e-15)

    def test_empty_hypothesis_all_zero(self):
        score = rouge_l(tok([]), tok(["a", "b"]))
        assert (score.precision, score.recall, score.f1) == (0.0, 0.0, 0.0)

    def test_short_sequence_zero_denominator(self):
        score = rouge_n(tok(["a"]), tok(["a", "b", "c"]), 2)
        assert score.precision == 0.0 and score.f1 == 0.0

    @given(tokens, tokens)
    @settings(max_examples=300)
    def test_rouge_l_matches_recursive_oracle(self, hyp, ref):
        lcs = lcs_length_recursive(tuple(hyp), tuple(ref))
        score = rouge_l(tok(hyp), tok(ref))
        assert lcs <= min(len(hyp), len(ref))
        if hyp:
            assert score.precision == lcs / len(hyp)
        if ref:
            assert score.recall == lcs / len(ref)

    @given(tokens, tokens, st.integers(1, 3))
    @settings(max_examples=300)
    def test_rouge_n_matches_enumeration_oracle(self, hyp, ref, n):
        overlap, hyp_total, ref_total = clipped_ngram_overlap(hyp, ref, n)
        score = rouge_n(tok(hyp), tok(ref), n)
        assert score.precision == (overlap / hyp_total if hyp_total else 0.0)
        assert score.recall == (overlap / ref_total if ref_total else 0.0)

    @given(tokens, tokens, st.integers(1, 3))
    @settings(max_examples=200)
    def test_swap_symmetry(self, hyp, ref, n):
        fwd = rouge_n(tok(hyp), tok(ref), n)
        rev = rouge_n(tok(ref), tok(hyp), n)
        assert fwd.precision == rev.recall and fwd.recall == rev.precision
        assert fwd.f1 == pytest.approx(rev.f1, abs=1e-15)
        fwd_l, rev_l = rouge_l(tok(hyp), tok(ref)), rouge_l(tok(ref), tok(hyp))
        assert fwd_l.precision == rev_l.recall and fwd_l.f1 == pytest.approx(rev_l.f1, abs=1e-15)

    def test_precision_equals_recall_gives_same_f1(self):
        score = rouge_n(tok(["a", "x"]), tok(["a", "y"]), 1)
        assert score.precision == score.recall == score.f1 == 0.5


class TestLengthDeviation:
    def test_exact_lengths(self):
        assert length_deviation([LengthRecord(10, 10), LengthRecord(7, 7)]) == 0.0

    def test_direct_formula(self):
        assert length_deviation([LengthRecord(8, 10), LengthRecord(12, 10)]) == pytest.approx(0.2, abs=1e-15)

    def test_empty_set(self):
        with pytest.raises(EmptySet):
            length_deviation([])

    def test_near_perfect_controller_scale(self):
        # a length-forcing decoder: one miss of a single token in ~13500
        records = [LengthRecord(27, 27)] * 499 + [LengthRecord(26, 27)]
        assert length_deviation(records) == pytest.approx(7.4e-5, rel=0.01)

    @given(
        st.lists(
            st.tuples(st.integers(0, 50), st.integers(1, 50)), min_size=1, max_size=20
        ),
        st.integers(2, 9),
    )
    def test_scale_consistency(self, pairs, factor):
        base = length_deviation([LengthRecord(o, e) for o, e in pairs])
        scaled = length_deviation(
            [LengthRecord(o * factor, e * factor) for o, e in pairs]
        )
        assert scaled == pytest.approx(base, rel=1e-12)

    def test_monotone_in_record_deviation(self):
        worse = [LengthRecord(6, 10), LengthRecord(10, 10)]
        better = [LengthRecord(8, 10), LengthRecord(10, 10)]
        assert length_deviation(worse) > length_deviation(better)

    def test_invalid_records(self):
        with pytest.raises(ValueError):
            LengthRecord(5, 0)
        with pytest.raises(ValueError):
            LengthRecord(-1, 5)


class TestLengthTargets:
    def test_round_half_up(self):
        assert round_half_up(2.5) == 3
        assert round_half_up(3.5) == 4  # not banker's rounding
        assert round_half_up(2.4) == 2

    def test_expected_length(self):
        assert expected_length(0.8, 10) == 8
        assert expected_length(0.5, 7) == 4  # 3.5 rounds up
        assert expected_length(0.5, 9) == 5
