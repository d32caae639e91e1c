import functools

import pytest

from lfmaxwell.feec import build_complex
from lfmaxwell.mesh import generate_structured
from lfmaxwell.operators import build_operators


@functools.lru_cache(maxsize=None)
def cached_complex(n, r):
    return build_complex(generate_structured(n), r)


@functools.lru_cache(maxsize=None)
def cached_operators(n, r):
    return build_operators(cached_complex(n, r))


@pytest.fixture
def complex_factory():
    return cached_complex


@pytest.fixture
def operators_factory():
    return cached_operators


_ACCEPTANCE = []


@pytest.fixture
def acceptance_report():
    def record(line):
        print(line)
        _ACCEPTANCE.append(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
