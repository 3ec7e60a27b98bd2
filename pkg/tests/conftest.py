import pytest

from seqsubmod import homogeneous_bundle, tiny_instance


@pytest.fixture
def tiny_fn():
    return tiny_instance()


@pytest.fixture
def tiny_bundle(tiny_fn):
    """The 3-item demo instance with unit weights at k=2."""
    return homogeneous_bundle(tiny_fn, (1.0, 1.0), n=3)


@pytest.fixture
def tiny_bundle_k3(tiny_fn):
    return homogeneous_bundle(tiny_fn, (1.0, 1.0, 1.0), n=3)
