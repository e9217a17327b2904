import pytest

from cfhist.expr import Expression, ExpressionError, TracingState


def test_reads_and_time():
    e = Expression("0.2 + 0.3*A - L*t")
    assert e.reads == {"A", "L"}
    assert "t" in e.names
    assert not e.is_constant
    assert Expression("(1)").is_constant


def test_compile_matches_evaluate():
    e = Expression("max(0.1, 0.5 - 0.2*K) + (A == 1) * 0.3")
    idx = {"A": 0, "K": 1}
    f = e.compile(idx)
    for a in (0, 1):
        for k in (0, 1, 2, 3):
            assert f([a, k], 0.0) == pytest.approx(e.evaluate({"A": a, "K": k}), abs=0)


@pytest.mark.parametrize("bad", ["A / 2", "A ** 2", "foo(A)", "'x'", "A if B else C", "0 < A < 1", "min(A)", "True"])
def test_rejects_outside_grammar(bad):
    with pytest.raises(ExpressionError):
        Expression(bad)


def test_tracing_state_records_reads():
    f = Expression("0.1 + L").compile({"A": 0, "L": 1, "K": 2})
    s = TracingState([1, 0, 2])
    f(s, 0.0)
    assert s.reads == {1}
