import hypothesis
import pytest

from broadsound.taxonomy import load_default_taxonomy, load_taxonomy

hypothesis.settings.register_profile("ci", max_examples=50, deadline=None)
hypothesis.settings.load_profile("ci")

MINIMAL_CONFIG = """
version: "t"
top:
  - code: T
    name: Top class
    children:
      - {code: T-1, name: Child one}
"""


@pytest.fixture(scope="session")
def taxonomy():
    return load_default_taxonomy()


@pytest.fixture()
def minimal_taxonomy():
    return load_taxonomy(MINIMAL_CONFIG)
