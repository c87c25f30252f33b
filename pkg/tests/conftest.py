import pytest


@pytest.fixture
def report(capsys):
    """Print one ``CRITERION n: PASS|FAIL detail`` line, bypassing capture."""

    def emit(n, ok, detail=""):
        with capsys.disabled():
            print(f"\nCRITERION {n}: {'PASS' if ok else 'FAIL'} {detail}".rstrip())
        return ok

    return emit
