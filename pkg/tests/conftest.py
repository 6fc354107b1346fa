import pytest

from treesearch import ScriptedModel, Vocabulary


@pytest.fixture
def worked_model():
    """root -> {a: .6, b: .4}; a -> {c: .9, d: .1}; b -> {c: .5, d: .5}."""
    vocab = Vocabulary(("a", "b", "c", "d"))
    return ScriptedModel(
        vocab,
        {
            (): [0.6, 0.4, 0.0, 0.0],
            (0,): [0.0, 0.0, 0.9, 0.1],
            (1,): [0.0, 0.0, 0.5, 0.5],
        },
    )


def _runaway_table(depth):
    """'!' feeds on itself at 0.95; everything else cycles a -> b -> c -> a at 0.85."""
    vocab = Vocabulary(("!", "a", "b", "c"))
    table = {(): [0.55, 0.45, 0.0, 0.0]}
    frontier = [(0,), (1,), (2,), (3,)]
    for _ in range(depth - 1):
        nxt = []
        for prefix in frontier:
            last = prefix[-1]
            if all(t == 0 for t in prefix):
                probs = [0.95, 0.05 / 3, 0.05 / 3, 0.05 / 3]
            else:
                probs = [0.05] * 4
                probs[(last % 3) + 1] = 0.85
            table[prefix] = probs
            nxt.extend(prefix + (t,) for t in range(4))
        frontier = nxt
    return ScriptedModel(vocab, table)


@pytest.fixture
def runaway_model():
    return _runaway_table(6)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
