import math

import numpy as np
import pytest

from wsc.labels import (
    LabelVocabulary,
    MarginalStats,
    MultiHotLabel,
    label_similarity,
    mean_label_entropy,
    mean_label_entropy_of_rates,
    pairwise_label_similarity,
    reference_corpus_stats,
)


@pytest.fixture(scope="module")
def vocab():
    return LabelVocabulary.default()


def make_label(vocab, *names):
    return MultiHotLabel.from_names(vocab, names)


class TestVocabulary:
    def test_default_has_33_categories(self, vocab):
        assert vocab.c_total == 33
        assert vocab.normal_index != vocab.others_index

    def test_from_lines_binds_directives(self):
        v = LabelVocabulary.from_lines(["ok #normal", "a", "b #others"])
        assert v.normal_index == 0 and v.others_index == 2

    def test_missing_directive_rejected(self):
        with pytest.raises(ValueError):
            LabelVocabulary.from_lines(["a #normal", "b"])

    def test_duplicate_names_rejected(self):
        with pytest.raises(ValueError):
            LabelVocabulary.from_lines(["a #normal", "a #others"])

    def test_bit_order_equals_file_order(self, tmp_path):
        path = tmp_path / "vocab.txt"
        path.write_text("x #normal\ny\nz #others\n", encoding="utf-8")
        v = LabelVocabulary.from_file(path)
        assert v.categories == ("x", "y", "z")
        assert v.index("y") == 1


class TestLabelSimilarity:
    def test_identical_labels(self, vocab):
        y = make_label(vocab, "出血", "硬渗")
        assert label_similarity(y, y) == pytest.approx(1.0)

    def test_others_only_is_inert(self, vocab):
        others = MultiHotLabel.others_only(vocab)
        assert label_similarity(others, others) == 0.0
        assert label_similarity(others, make_label(vocab, "出血")) == 0.0

    def test_subset_hand_value(self, vocab):
        a = make_label(vocab, "出血", "硬渗")
        b = make_label(vocab, "出血")
        assert label_similarity(a, b) == pytest.approx(1 / math.sqrt(2), abs=1e-12)

    def test_symmetric_and_bounded(self, vocab):
        rng = np.random.default_rng(0)
        for _ in range(50):
            a = MultiHotLabel(vocab, rng.integers(0, 2, vocab.c_total))
            b = MultiHotLabel(vocab, rng.integers(0, 2, vocab.c_total))
            s = label_similarity(a, b)
            assert 0.0 <= s <= 1.0
            assert s == pytest.approx(label_similarity(b, a), abs=1e-15)

    def test_adding_others_bit_never_changes_similarity(self, vocab):
        rng = np.random.default_rng(1)
        for _ in range(30):
            bits = rng.integers(0, 2, vocab.c_total)
            bits[vocab.others_index] = 0
            a = MultiHotLabel(vocab, bits)
            with_others = bits.copy()
            with_others[vocab.others_index] = 1
            aw = MultiHotLabel(vocab, with_others)
            b = MultiHotLabel(vocab, rng.integers(0, 2, vocab.c_total))
            assert label_similarity(a, b) == pytest.approx(label_similarity(aw, b), abs=1e-15)

    def test_vocabulary_mismatch_rejected(self, vocab):
        other = LabelVocabulary.from_lines(["a #normal", "b #others"])
        with pytest.raises(ValueError):
            label_similarity(MultiHotLabel.others_only(vocab), MultiHotLabel.others_only(other))


class TestPairwiseLabelSimilarity:
    def test_distinct_single_bits_give_identity(self, vocab):
        ys = [make_label(vocab, c) for c in ("出血", "硬渗", "青光眼")]
        np.testing.assert_allclose(pairwise_label_similarity(ys, ys), np.eye(3), atol=1e-15)

    def test_others_row_is_zero(self, vocab):
        ys = [MultiHotLabel.others_only(vocab), make_label(vocab, "出血")]
        S = pairwise_label_similarity(ys, ys)
        np.testing.assert_array_equal(S[0], [0.0, 0.0])

    def test_matches_scalar_loop(self, vocab):
        rng = np.random.default_rng(2)
        ys = [MultiHotLabel(vocab, rng.integers(0, 2, vocab.c_total)) for _ in range(5)]
        S = pairwise_label_similarity(ys, ys)
        for i in range(5):
            for j in range(5):
                assert S[i, j] == pytest.approx(label_similarity(ys[i], ys[j]), abs=1e-12)


class TestMeanLabelEntropy:
    def test_all_zero_rates(self):
        stats = MarginalStats(np.zeros(4, dtype=np.int64), 10)
        assert mean_label_entropy(stats) == 0.0

    def test_single_category_half_rate_is_ln2(self):
        stats = MarginalStats(np.array([5]), 10)
        assert mean_label_entropy(stats) == pytest.approx(math.log(2), abs=1e-12)

    def test_zero_when_rates_are_zero_or_one(self):
        stats = MarginalStats(np.array([0, 10, 10, 0]), 10)
        assert mean_label_entropy(stats) == 0.0

    def test_maximized_at_half(self):
        half = mean_label_entropy_of_rates(np.full(7, 0.5))
        assert half == pytest.approx(math.log(2), abs=1e-12)
        rng = np.random.default_rng(3)
        for _ in range(25):
            assert mean_label_entropy_of_rates(rng.uniform(0, 1, 7)) <= half + 1e-12

    def test_invariant_under_reordering(self):
        rng = np.random.default_rng(4)
        counts = rng.integers(0, 100, 12)
        a = mean_label_entropy(MarginalStats(counts, 100))
        b = mean_label_entropy(MarginalStats(np.flip(counts), 100))
        assert a == pytest.approx(b, abs=1e-15)

    def test_count_exceeding_total_rejected(self):
        with pytest.raises(ValueError):
            MarginalStats(np.array([11]), 10)

    def test_oracle_direct_sum(self):
        # independent recomputation straight from the formula
        counts = np.array([3, 0, 7, 10])
        total = 10
        expected = 0.0
        for c in counts:
            p = c / total
            for q in (p, 1 - p):
                if q > 0:
                    expected -= q * math.log(q)
        expected /= len(counts)
        assert mean_label_entropy(MarginalStats(counts, total)) == pytest.approx(
            expected, abs=1e-15)

    def test_vocab_width_must_match(self, vocab):
        with pytest.raises(ValueError):
            mean_label_entropy(MarginalStats(np.array([1, 2]), 10), vocab)


class TestReferenceCorpus:
    def test_reference_stats_load(self, vocab):
        stats, v = reference_corpus_stats()
        assert v == vocab
        assert stats.total == 451956
        assert stats.counts.size == 33

    def test_reference_mle_in_expected_band(self):
        stats, vocab = reference_corpus_stats()
        value = mean_label_entropy(stats, vocab)
        assert 0.135 <= value <= 0.155
