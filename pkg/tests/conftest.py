import numpy as np
import pytest
import torch

from softmasklab.data import SyntheticSpec, generate_synthetic_corpus

torch.set_num_threads(2)


@pytest.fixture(scope="session")
def tiny_spec():
    return SyntheticSpec(num_domains=2, identities=4, images_per_identity=4,
                         image_size=(32, 16), seed=7)


@pytest.fixture(scope="session")
def tiny_corpus(tiny_spec):
    return generate_synthetic_corpus(tiny_spec)


@pytest.fixture(scope="session")
def default_corpus():
    """The default desk-scale corpus (2 domains, 64x32, 384 images)."""
    return generate_synthetic_corpus(SyntheticSpec())


@pytest.fixture
def rng():
    return np.random.default_rng(0)
