import pytest

from corpus import FIG6
from scenario_forge.pipeline import compile_file


@pytest.fixture(scope="session")
def fig6():
    return compile_file(FIG6)


