import pytest
from hypothesis import given, strategies as st

from filterbench.errors import ResourceError
from filterbench.gen import Generator
from filterbench.model import parse_model, shipped_model, z_truncation
from filterbench.reduction import (
    Converged,
    FuelExhausted,
    Refuted,
    RuleId,
    enumerate_steps,
    eval as reduce_eval,
    eval_full,
    is_mhnf,
    normalize,
    outcome_name,
    replay,
    split_beta_first,
    step_head,
)
from filterbench.syntax import EPS, OMEGA_T, ZERO, parse_any, parse_term, parse_test, show

DINF, PINF, NORM = (shipped_model(n) for n in ("dinf", "pinf", "norm"))
Z3 = shipped_model("z3")


def run(text, m, fuel=1_000):
    return reduce_eval(parse_any(text, m), m, fuel)


def steps_of(o):
    return [(str(s.rule), show(s.result)) for s in o.trace]


def test_park():
    o = run(r"tau[*](\x. x x)", PINF, 50)
    assert isinstance(o, Converged) and o.final == EPS
    got = steps_of(o)
    assert got[0] == ("tau", "tau[*](ebar[*] ebar[*])")
    assert got[1][0] == "taubar"
    assert parse_any(got[1][1], PINF) == parse_test("tau[*](bar[*](tau[*](ebar[*])))", PINF)
    assert got[-1] == ("tau-taubar", "eps")


def test_scott_converging():
    o = run(r"tau[*]((\x y. x y) ebar[*])", DINF)
    assert isinstance(o, Converged) and o.final == EPS
    assert [r for r, _ in steps_of(o)] == ["beta", "tau", "taubar", "tau-taubar"]


def test_scott_refuted():
    o = run(r"tau[*]((\x y. y x) ebar[*])", DINF)
    assert isinstance(o, Refuted)
    assert steps_of(o) == [
        ("beta", r"tau[*](\y. y ebar[*])"),
        ("tau", "tau[*](0t ebar[*])"),
        ("taubar", "tau[*](0t)"),
        ("tau-taubar", "0"),
    ]


def test_norm_identity():
    o = run(r"tau[p](\x. x)", NORM)
    assert steps_of(o) == [("tau", "tau[p](ebar[q])"), ("tau-taubar", "eps")]
    o = run(r"tau[q](\x. x)", NORM)
    assert isinstance(o, Refuted)
    assert steps_of(o) == [("tau", "tau[q](ebar[p])"), ("tau-taubar", "0")]


@pytest.mark.parametrize("n", range(4))
def test_z_applications(n):
    two = (n + 2) % 4
    o = run(f"tau[{two}](ebar[{n}] a b)", Z3)
    assert isinstance(o, Converged)
    assert steps_of(o)[-2:] == [("taubar", f"tau[{two}](ebar[{two}])"), ("tau-taubar", "eps")]
    assert isinstance(run(f"tau[{two}](ebar[{n}] a)", Z3), Refuted)
    assert isinstance(run(f"tau[{two}](ebar[{n}] a b c)", Z3), Refuted)


def test_z_larger_truncation():
    z5 = parse_model(z_truncation(5))
    assert isinstance(run("tau[3](ebar[1] a b)", z5), Converged)


def test_self_application_in_dinf_refutes():
    # the arrow ext pair of * has source top, whose canonical inhabitant is 0t
    o = run(r"tau[*](\x. x x)", DINF, 10_000)
    assert isinstance(o, Refuted)


def test_bare_omega_is_stuck():
    o = reduce_eval(OMEGA_T, DINF, 10)
    assert isinstance(o, FuelExhausted) and o.stuck and o.steps == 0


def test_omega_rules():
    assert step_head(parse_test("tau[*](Omega)", DINF), DINF)[0] == RuleId.OMEGA_TAU
    assert step_head(parse_term(r"\x. Omega", DINF), DINF)[0] == RuleId.OMEGA_LAM
    assert step_head(parse_term("Omega x", DINF), DINF)[0] == RuleId.OMEGA_APP
    assert isinstance(run("tau[*](Omega)", DINF), Refuted)


def test_divergence_exhausts_fuel():
    o = run(r"tau[*]((\x. x x) (\x. x x))", DINF, 200)
    assert isinstance(o, FuelExhausted) and not o.stuck and o.steps == 200


def test_sum_size_guard():
    big = " + ".join(["ebar[*]"] * 17)
    with pytest.raises(ResourceError):
        run(f"tau[*]({big})", DINF)


def test_may_convergence_finds_late_summand():
    o = run(r"tau[*]((\x. x x) (\x. x x)) + tau[p](\x. x)".replace("[*]", "[q]"), NORM, 500)
    assert isinstance(o, Converged)


def test_mhnf():
    assert is_mhnf(EPS)
    assert is_mhnf(parse_test("tau[*](x y)", DINF))
    assert is_mhnf(parse_test("tau[*](x) * tau[*](y z) + tau[*](\\x. x)", DINF))
    assert not is_mhnf(parse_test(r"tau[*](\x. x)", DINF))
    assert not is_mhnf(ZERO)
    assert is_mhnf(parse_term(r"\x y. y x", DINF))
    assert is_mhnf(parse_term(r"\x. ebar[*]", DINF))


def test_enumerate_two_beta_redexes():
    got = enumerate_steps(parse_term(r"(\x. x) ((\y. y) z)", DINF), DINF)
    assert len(got) == 2 and {r for r, _, _ in got} == {RuleId.BETA}


def test_enumerate_single_test_step():
    got = enumerate_steps(parse_test("tau[p](ebar[q])", NORM), NORM)
    assert [(r, t) for r, _, t in got] == [(RuleId.TAU_TAUBAR, EPS)]


def test_enumerate_normal_term():
    assert enumerate_steps(parse_term("x (y z)", DINF), DINF) == set()


def test_split_scott():
    t = parse_test(r"tau[*]((\x y. y x) ebar[*])", DINF)
    pre, rest = split_beta_first(t, DINF, 100)
    assert [s.rule for s in pre] == [RuleId.BETA]
    assert all(s.rule != RuleId.BETA for s in rest)
    assert rest[-1].result == ZERO


def test_split_beta_normal():
    t = parse_test(r"tau[p](\x. x)", NORM)
    pre, rest = split_beta_first(t, NORM, 100)
    assert pre == [] and rest[-1].result == EPS


def test_normalize_term():
    assert normalize(parse_term(r"(\x. x) y", DINF), DINF) == parse_term("y", DINF)


def test_replay_accepts_and_rejects():
    t = parse_test(r"tau[*]((\x y. x y) ebar[*])", DINF)
    o = reduce_eval(t, DINF, 100)
    assert replay(t, DINF, o.trace)
    assert not replay(t, DINF, o.trace[1:])


def test_trace_format():
    o = run(r"tau[*]((\x y. y x) ebar[*])", DINF)
    assert o.trace[0].format() == r"--beta@0--> tau[*](\y. y ebar[*])"
    assert o.trace[-1].format() == "--tau-taubar@root--> 0"


# properties


def _closed_tests(name):
    m = shipped_model(name)

    @st.composite
    def build(draw):
        g = Generator(m, draw(st.integers(0, 10**6)))
        return g.closed_test(draw(st.integers(2, 9)))

    return m, build()


DINF_TESTS = _closed_tests("dinf")[1]
NORM_TESTS = _closed_tests("norm")[1]


@pytest.mark.parametrize("m,tests", [(DINF, DINF_TESTS), (NORM, NORM_TESTS)], ids=["dinf", "norm"])
@given(data=st.data())
def test_traces_replay(m, tests, data):
    t = data.draw(tests)
    o = reduce_eval(t, m, 500)
    assert replay(t, m, o.trace)
    f = eval_full(t, m, 500, seed=data.draw(st.integers(0, 99)))
    assert replay(t, m, f.trace)


@pytest.mark.parametrize("m,tests", [(DINF, DINF_TESTS), (NORM, NORM_TESTS)], ids=["dinf", "norm"])
@given(data=st.data())
def test_head_deterministic_up_to_presentation(m, tests, data):
    t = data.draw(tests)
    again = parse_any(show(t), m)
    a, b = reduce_eval(t, m, 500), reduce_eval(again, m, 500)
    assert outcome_name(a) == outcome_name(b) and a.steps == b.steps
    if isinstance(a, Converged):
        assert a.final == b.final


@pytest.mark.parametrize("m,tests", [(DINF, DINF_TESTS), (NORM, NORM_TESTS)], ids=["dinf", "norm"])
@given(data=st.data())
def test_strategies_agree(m, tests, data):
    t = data.draw(tests)
    a = reduce_eval(t, m, 2_000, trace=False)
    b = eval_full(t, m, 2_000, seed=data.draw(st.integers(0, 99)), trace=False)
    if not (isinstance(a, FuelExhausted) or isinstance(b, FuelExhausted)):
        assert type(a) is type(b)


@pytest.mark.parametrize("m,tests", [(DINF, DINF_TESTS), (NORM, NORM_TESTS)], ids=["dinf", "norm"])
@given(data=st.data())
def test_converged_finals_are_mhnf(m, tests, data):
    o = reduce_eval(data.draw(tests), m, 1_000, trace=False)
    if isinstance(o, Converged):
        assert is_mhnf(o.final)


@pytest.mark.parametrize("m,tests", [(DINF, DINF_TESTS), (NORM, NORM_TESTS)], ids=["dinf", "norm"])
@given(data=st.data())
def test_beta_postponement(m, tests, data):
    t = data.draw(tests)
    o = reduce_eval(t, m, 1_000, trace=False)
    if isinstance(o, Converged):
        split = split_beta_first(t, m, 10_000)
        assert split is not None
        pre, rest = split
        assert all(s.rule == RuleId.BETA for s in pre)
        assert all(s.rule != RuleId.BETA for s in rest)
