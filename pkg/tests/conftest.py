import warnings

import pytest

from anchoreg import HypothesisWarning


@pytest.fixture(autouse=True)
def _quiet_hypothesis_warnings():
    # Many tests run moving-anchor configs at the default c0, where the
    # bound hypothesis legitimately fails; the warning itself is asserted
    # in dedicated tests via pytest.warns, which bypasses this filter.
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", HypothesisWarning)
        yield
