import pytest
from hypothesis import given, strategies as st

from filterbench.approximants import (
    DomainError,
    NoneWithinFuel,
    WitnessFound,
    approximability_check,
    approximants,
    direct_approximant,
    is_bohm_normal,
    normal_order_step,
)
from filterbench.gen import label_pool, normal_forms, value_pool
from filterbench.model import shipped_model
from filterbench.reduction import Converged, eval as reduce_eval
from filterbench.semantics import Derivable, TermJ, check, closed_instance, make_env
from filterbench.syntax import OMEGA_T, free_vars, parse_term, show

from strategies import terms

DINF, NORM, KERTH = (shipped_model(n) for n in ("dinf", "norm", "kerth"))
PURE, _ = terms(DINF, pure=True)
Y_F = r"(\f. (\x. f (x x)) (\x. f (x x))) (\f x. x (f x))"


def t(text):
    return parse_term(text, DINF)


def test_head_redex_becomes_omega():
    assert direct_approximant(t(r"(\x. x) y")) == OMEGA_T


def test_arguments_are_approximated():
    assert direct_approximant(t(r"\x. x ((\y. y) z)")) == t(r"\x. x Omega")


def test_normal_terms_are_fixed():
    for text in (r"\x y z. y", r"\x. x", "x"):
        assert direct_approximant(t(text)) == t(text)


def test_test_constructs_rejected():
    with pytest.raises(DomainError):
        direct_approximant(t("ebar[*]"))
    with pytest.raises(DomainError):
        approximants(t(r"\x. ebar[*]"))


def test_identity_chain():
    assert approximants(t(r"\x. x")) == [t(r"\x. x")]


def test_self_application_chain():
    assert approximants(t(r"(\x. x x) (\x. x x)"), 100) == [OMEGA_T]


def test_fixpoint_chain():
    got = [show(a) for a in approximants(t(Y_F), 200, 4)]
    assert got == ["Omega", r"\x. x Omega", r"\x. x (x Omega)", r"\x. x (x (x Omega))"]


def test_bohm_normal():
    assert is_bohm_normal(OMEGA_T)
    assert is_bohm_normal(t(r"\x. x Omega"))
    assert not is_bohm_normal(t(r"(\x. x) y"))
    assert not is_bohm_normal(t(r"\x. Omega x"))


def test_normal_order_step_prefers_head():
    assert normal_order_step(t(r"x ((\y. y) z)")) == t("x z")
    assert normal_order_step(t(r"(\y. y) ((\y. y) z)")) == t(r"(\y. y) z")
    assert normal_order_step(t("x y")) is None


def test_identity_witness():
    r = approximability_check(parse_term(r"\x. x", NORM), (), NORM.parse_type("p"), NORM)
    assert isinstance(r, WitnessFound) and r.approximant == parse_term(r"\x. x", NORM)
    assert r.disagreements == []


def test_omega_has_no_witness():
    r = approximability_check(OMEGA_T, (), NORM.parse_type("p"), NORM)
    assert isinstance(r, NoneWithinFuel)


def test_kerth_has_no_witness_early():
    v = parse_term(r"(\x y. y (x x)) (\x y. y (x x))", KERTH)
    r = approximability_check(v, (), KERTH.parse_type("b"), KERTH, 2_000, 40)
    assert isinstance(r, NoneWithinFuel) and r.disagreements == []


def test_witness_with_free_variable():
    p = NORM.parse_type("p")
    r = approximability_check(parse_term(r"(\y. y) x", NORM), {"x": p}, p, NORM)
    assert isinstance(r, WitnessFound) and r.approximant == parse_term("x", NORM)


# properties


@given(PURE)
def test_approximants_are_bohm_normal(term):
    for a in approximants(term, 200, 20):
        assert is_bohm_normal(a)


@given(PURE)
def test_direct_approximant_idempotent(term):
    a = direct_approximant(term)
    assert direct_approximant(a) == a


@pytest.mark.parametrize("m", [DINF, NORM], ids=["dinf", "norm"])
@given(data=st.data())
def test_membership_grows_along_chain(m, data):
    term = data.draw(PURE)
    labels, values = label_pool(m, 1), value_pool(m, 1)
    xs = sorted(free_vars(term))
    env = {x: data.draw(st.sampled_from(values)) for x in xs}
    target = data.draw(st.sampled_from(labels))
    chain = approximants(term, 200, 8)
    seen = False
    for a in chain:
        ok = isinstance(check(TermJ(make_env((x, env[x]) for x in sorted(free_vars(a))), a,
                                    target), m), Derivable)
        assert ok or not seen
        seen = ok


@pytest.mark.parametrize("m", [DINF, NORM], ids=["dinf", "norm"])
def test_three_way_agreement_small(m):
    labels, values = label_pool(m, 1), value_pool(m, 1)
    for s in normal_forms(4):
        xs = sorted(free_vars(s))
        for vals in _envs(values, len(xs)):
            env = dict(zip(xs, vals))
            for b in labels:
                a = reduce_eval(closed_instance(s, env, b), m, 2_000, trace=False, no_beta=True)
                c = reduce_eval(closed_instance(direct_approximant(s), env, b), m, 2_000,
                                trace=False)
                d = check(TermJ(make_env(env.items()), s, b), m)
                assert isinstance(a, Converged) == isinstance(c, Converged) == isinstance(d, Derivable)


def _envs(values, n):
    if n == 0:
        yield ()
        return
    for v in values:
        for rest in _envs(values, n - 1):
            yield (v,) + rest
