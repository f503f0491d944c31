import numpy as np
import pytest

from projstruct.structures import (
    BandingFamily,
    BiclusterFamily,
    Caps,
    ClusteringFamily,
    JumpFamily,
    KnotFamily,
    LeveledSparsityFamily,
    RegressionFamily,
    SmoothnessFamily,
    SparsityFamily,
)


def small_families(rng=None):
    """One small instance per family, sized so full enumeration is cheap."""
    rng = rng or np.random.default_rng(1234)
    design = rng.standard_normal((12, 8))
    return {
        "smoothness": SmoothnessFamily(8),
        "sparsity": SparsityFamily(8),
        "leveled": LeveledSparsityFamily(3),
        "clustering": ClusteringFamily(6),
        "jump": JumpFamily(8),
        "knot": KnotFamily(8),
        "regression": RegressionFamily(design),
        "banding": BandingFamily(4),
        "bicluster": BiclusterFamily(3, 3),
    }


ENUM_CAPS = {
    "clustering": Caps(max_blocks=3),
    "bicluster": Caps(max_blocks=3),
}


def enumerate_small(family):
    return list(family.enumerate_structures(ENUM_CAPS.get(family.tag)))


@pytest.fixture
def families():
    return small_families()
