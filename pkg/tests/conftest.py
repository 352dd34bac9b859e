import pytest

from rml import accel


@pytest.fixture(scope="session", autouse=True)
def warm_accel():
    # jit-compile every hot kernel up front so timed tests measure work,
    # not compilation
    accel.warm_up()
