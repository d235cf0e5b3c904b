import warnings

import pytest

from drpinns.problems import BoundaryDataWarning


@pytest.fixture(autouse=True)
def _quiet_boundary_warning():
    # the ex4 boundary-data mismatch warning is asserted in its own test;
    # everywhere else it is expected noise
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BoundaryDataWarning)
        yield
