from fractions import Fraction

import numpy as np
import pytest
from hypothesis import strategies as st

from paintbox_kit.allocation import FeatureAllocation
from paintbox_kit.probability import TwoFeatureParams

# running example over [6]
F6 = FeatureAllocation(6, ((2, 5, 4), (3, 4), (6, 4), (3,), (3,)))
EX5 = TwoFeatureParams(Fraction(1, 10), Fraction(1, 5), Fraction(3, 10), Fraction(2, 5))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@st.composite
def allocations(draw, max_n=5, max_k=4):
    n = draw(st.integers(1, max_n))
    feats = draw(
        st.lists(
            st.sets(st.integers(1, n), min_size=1),
            max_size=max_k,
        )
    )
    return FeatureAllocation(n, tuple(tuple(sorted(f)) for f in feats))


def rational_two_feature(rng, factorizable: bool, den: int = 12) -> TwoFeatureParams:
    """Random rational two-feature parameters, optionally of product form."""
    if factorizable:
        q1 = Fraction(int(rng.integers(1, den)), den)
        q2 = Fraction(int(rng.integers(1, den)), den)
        return TwoFeatureParams(q1 * (1 - q2), (1 - q1) * q2, q1 * q2, (1 - q1) * (1 - q2))
    cuts = sorted(int(c) for c in rng.choice(np.arange(1, 20), size=3, replace=False))
    parts = [cuts[0], cuts[1] - cuts[0], cuts[2] - cuts[1], 20 - cuts[2]]
    return TwoFeatureParams(*(Fraction(p, 20) for p in parts))


def two_feature_grid(count: int = 50, seed: int = 5):
    """Half product-form, half generic rational parameter draws."""
    rng = np.random.default_rng(seed)
    return [rational_two_feature(rng, factorizable=i % 2 == 0) for i in range(count)]


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
