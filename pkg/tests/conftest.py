import random

import pytest

from assockit.assoc import Assoc


@pytest.fixture
def people():
    """Small mixed-weight array used across selector and algebra tests."""
    return Assoc(
        [
            ("alfred", "carl", 11.0),
            ("alice", "bob", 47.0),
            ("alice", "carl", 3.0),
            ("bob", "alice", 2.0),
            ("bob", "dan", 5.0),
            ("carl", "alice", 9.0),
        ]
    )


def random_triples(rng: random.Random, n_rows=8, n_cols=8, density=0.4, numeric=True):
    rows = [f"r{i:02d}" for i in range(n_rows)]
    cols = [f"c{i:02d}" for i in range(n_cols)]
    out = []
    for r in rows:
        for c in cols:
            if rng.random() < density:
                if numeric:
                    out.append((r, c, round(rng.uniform(-5, 5), 3) or 1.0))
                else:
                    out.append((r, c, rng.choice("xyzw")))
    return out


def random_graph(rng: random.Random, max_n=64):
    """Random simple undirected graph as weighted (u, v, w) edges."""
    n = rng.randint(4, max_n)
    p = rng.uniform(0.05, 0.3)
    verts = [f"v{i:03d}" for i in range(n)]
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < p:
                edges.append((verts[i], verts[j], float(rng.randint(1, 3))))
    return edges


# one line per acceptance criterion, echoed after the run so the verdicts
# survive output capture
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.ensure_newline()
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
