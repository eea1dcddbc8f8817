import pytest

from commdiff.numcore import set_precision


@pytest.fixture(autouse=True)
def working_precision():
    set_precision(113)
    yield
