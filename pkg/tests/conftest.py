import pytest

from liverec.backends import build_session, compile_source, get_backend, load_code
from liverec.probespec import parse_annotation


@pytest.fixture()
def workdir(tmp_path):
    d = tmp_path / "work"
    d.mkdir()
    return d


@pytest.fixture(scope="session")
def mock_backend():
    return get_backend("mock")


@pytest.fixture()
def mock_session(mock_backend, workdir):
    """A launched mock-adapter session idling at the keep-alive breakpoint."""
    session = build_session(mock_backend, workdir)
    session.launch()
    try:
        yield session
    finally:
        session.close()


def prepare(session, backend, source):
    """Compile + load ``source`` into a live session; returns the probe."""
    probe = parse_annotation(source, backend.comment_marker, backend.language)
    assert probe is not None
    artifact = compile_source(backend, source, session.config.workdir)
    load_code(backend, session, artifact)
    return probe
