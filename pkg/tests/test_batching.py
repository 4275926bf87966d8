import numpy as np
import pytest

from softmasklab.data import (
    Corpus,
    ImageSample,
    SyntheticSpec,
    compose_gan_batch,
    generate_synthetic_corpus,
    special_count,
)
from softmasklab.exceptions import DataError


def _flat_corpus(num_domains=3, per_domain=6):
    samples = []
    for d in range(num_domains):
        for i in range(per_domain):
            samples.append(ImageSample(
                image=np.zeros((8, 4, 3), dtype=np.float32),
                identity=i, camera=i % 2, domain=d,
                mask=np.ones((8, 4), dtype=np.float32),
            ))
    return Corpus(samples, num_domains)


class TestSpecialCount:
    def test_paper_batch(self):
        # batch of 16 with K domains selects exactly K + 1 members
        assert special_count(16, 3) == 4
        assert special_count(16, 2) == 3

    def test_clamped_to_batch(self):
        assert special_count(16, 15) == 16

    def test_fraction_of_other_batches(self):
        assert special_count(8, 3) == 2

    def test_minimum_one(self):
        assert special_count(2, 2) == 1
        assert special_count(1, 2) == 1


class TestComposeGanBatch:
    def test_partition_sizes(self, rng):
        corpus = _flat_corpus()
        plan = compose_gan_batch(corpus, 16, rng)
        assert len(plan.special) == 4
        assert len(plan.general) == 12

    def test_partition_property_random_triples(self):
        # special and general are disjoint and cover the batch for many
        # random (batch_size, K, seed) triples
        meta_rng = np.random.default_rng(123)
        corpora = {k: _flat_corpus(num_domains=k, per_domain=40)
                   for k in (2, 3, 5)}
        for _ in range(1000):
            k = int(meta_rng.choice([2, 3, 5]))
            batch_size = int(meta_rng.integers(1, 33))
            seed = int(meta_rng.integers(0, 2**31))
            plan = compose_gan_batch(corpora[k], batch_size,
                                     np.random.default_rng(seed))
            special, general = set(plan.special), set(plan.general)
            assert not special & general
            assert len(plan.special) + len(plan.general) == batch_size
            assert len(plan.special) == special_count(batch_size, k)

    def test_general_targets_are_foreign(self, rng):
        corpus = _flat_corpus()
        for _ in range(50):
            plan = compose_gan_batch(corpus, 12, rng)
            for idx, target in zip(plan.general, plan.general_targets):
                assert target != corpus[idx].domain
                assert 0 <= target < corpus.num_domains

    def test_deterministic_given_seed(self):
        corpus = _flat_corpus()
        a = compose_gan_batch(corpus, 16, np.random.default_rng(5))
        b = compose_gan_batch(corpus, 16, np.random.default_rng(5))
        assert a == b

    def test_rejects_bad_batch_size(self, rng):
        with pytest.raises(ValueError):
            compose_gan_batch(_flat_corpus(), 0, rng)

    def test_rejects_single_domain(self, rng):
        with pytest.raises(ValueError):
            compose_gan_batch(_flat_corpus(num_domains=1), 4, rng)


def test_plan_on_synthetic_corpus(rng):
    corpus = generate_synthetic_corpus(
        SyntheticSpec(num_domains=2, identities=2, images_per_identity=4,
                      image_size=(16, 8))
    )
    plan = compose_gan_batch(corpus, 16, rng)
    assert plan.batch_size == 16
    assert len(plan.special) == 3  # round(16 * 3/16)
