import pytest

from sparseprint import fixtures
from sparseprint import gallery as gal


@pytest.fixture(scope="session")
def small_set(tmp_path_factory):
    """Six 64x64 prints on disk; the first five are enrolled, the last is not."""
    root = tmp_path_factory.mktemp("small")
    made = fixtures.write_fixtures(root / "fx", 6, 64, 0)
    g = gal.Gallery()
    for fx in made[:5]:
        g = gal.enroll(g, fx.label, fx.image)
    gal.save(g, root / "gal")
    return root, made
