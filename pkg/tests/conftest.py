import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from icim.fixtures import build_stylized_fixture
from icim.graph import SocialGraph

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@st.composite
def small_graphs(draw, n_min=1, n_max=6, max_edges=9, epsilon=0.1, interior=False):
    n = draw(st.integers(n_min, n_max))
    pairs = [(u, v) for u in range(n) for v in range(n) if u != v]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=min(max_edges, len(pairs)))) if pairs else []
    steps = round(1 / epsilon)
    lo, hi = (1, steps - 1) if interior else (0, steps)
    ticks = draw(st.lists(st.integers(lo, hi), min_size=len(chosen), max_size=len(chosen)))
    return SocialGraph.build(n, [(u, v, t / steps) for (u, v), t in zip(chosen, ticks)], epsilon)


@st.composite
def graph_and_seeds(draw, **kw):
    g = draw(small_graphs(**kw))
    seeds = draw(st.lists(st.integers(0, g.n - 1), min_size=1, max_size=g.n, unique=True))
    return g, sorted(seeds)


def path_graph(n=3, p=1.0, epsilon=0.1):
    return SocialGraph.build(n, [(i, i + 1, p) for i in range(n - 1)], epsilon)


@pytest.fixture(scope="session")
def stylized():
    return build_stylized_fixture()


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
