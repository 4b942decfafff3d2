import pytest
from hypothesis import given, strategies as st

from filterbench.errors import LabelError, ParseError
from filterbench.model import shipped_model
from filterbench.syntax import (
    EPS,
    OMEGA_T,
    ZERO,
    ZERO_T,
    App,
    BarSum,
    Lam,
    Prod,
    Sum,
    Tau,
    Var,
    alpha_eq,
    canonicalize,
    ebar,
    free_vars,
    parse_any,
    parse_term,
    parse_test,
    show,
    size,
    substitute,
)

from strategies import terms

PINF = shipped_model("pinf")
NORM = shipped_model("norm")
STAR = PINF.parse_type("*")

TERMS, TESTS = terms(NORM)


def test_parse_self_application():
    assert parse_term(r"\x. x x", PINF) == Lam("x", App(Var("x"), Var("x")))


def test_parse_park_test():
    t = parse_test("tau[*](ebar[*] ebar[*])", PINF)
    assert t == Tau(STAR, App(ebar(STAR), ebar(STAR)))


def test_top_label_rejected():
    with pytest.raises(LabelError):
        parse_test("tau[w](x)", PINF)
    with pytest.raises(LabelError):
        parse_term("ebar[w]", PINF)


@pytest.mark.parametrize("text", [r"\x. (x", "x )", "tau[*](x", r"\. x", "tau[zz](x)", "x + "])
def test_parse_errors_report_position(text):
    with pytest.raises(ParseError) as err:
        parse_any(text, PINF)
    assert "column" in str(err.value)


def test_constants():
    assert parse_term("0t", PINF) == ZERO_T
    assert parse_term("Omega", PINF) == OMEGA_T
    assert parse_test("0", PINF) == ZERO
    assert parse_test("eps", PINF) == EPS


def test_product_binds_tighter():
    t = parse_test("tau[*](x) + tau[*](y) * tau[*](z)", PINF)
    assert isinstance(t, Sum)
    assert any(isinstance(q, Prod) for q in t.items)


def test_application_left_associative():
    assert parse_term("f a b", PINF) == App(App(Var("f"), Var("a")), Var("b"))


# substitution


def test_substitute_variable():
    n = parse_term(r"\z. z", PINF)
    assert substitute(Var("x"), "x", n) == n


def test_substitute_avoids_capture():
    r = substitute(Lam("y", Var("x")), "x", Var("y"))
    assert isinstance(r, Lam) and r.var != "y"
    assert r.body == Var("y")
    assert free_vars(r) == {"y"}


def test_substitute_under_test():
    beta = NORM.parse_type("q")
    r = substitute(Tau(NORM.parse_type("p"), Var("x")), "x", ebar(beta))
    assert r == Tau(NORM.parse_type("p"), ebar(beta))


# canonical forms


def test_sum_neutral():
    p = parse_test("tau[*](x)", PINF)
    assert canonicalize(Sum((Sum((p,)), ZERO))) == p


def test_prod_neutral():
    q = parse_test("tau[*](y)", PINF)
    assert canonicalize(Prod((EPS, q))) == q


def test_prod_flattens():
    q, r = parse_test("tau[*](y)", PINF), parse_test("tau[*](z)", PINF)
    got = canonicalize(Prod((q, Prod((r, EPS)))))
    assert isinstance(got, Prod) and sorted(map(show, got.items)) == [show(q), show(r)]


def test_duplicates_preserved():
    p = parse_test("tau[*](x)", PINF)
    assert len(canonicalize(Sum((p, p))).items) == 2


def test_single_entry_barsum_kept():
    t = canonicalize(BarSum(((STAR, EPS),)))
    assert isinstance(t, BarSum) and len(t.entries) == 1


def test_alpha_equivalence():
    assert alpha_eq(parse_term(r"\x. x", PINF), parse_term(r"\y. y", PINF))
    assert not alpha_eq(parse_term(r"\x. y", PINF), parse_term(r"\y. y", PINF))


def test_multiset_order_irrelevant():
    a = parse_test("tau[p](x) + tau[q](y)", NORM)
    b = parse_test("tau[q](y) + tau[p](x)", NORM)
    assert a == b and hash(a) == hash(b)


def test_size():
    assert size(parse_term(r"\x. x x", PINF)) == 4
    assert size(OMEGA_T) == 1


# properties


@given(TERMS)
def test_canonicalize_idempotent_terms(t):
    c = canonicalize(t)
    assert canonicalize(c) == c
    assert show(canonicalize(c)) == show(c)


@given(TESTS)
def test_canonicalize_idempotent_tests(t):
    c = canonicalize(t)
    assert canonicalize(c) == c


@given(st.one_of(TERMS, TESTS))
def test_print_parse_roundtrip(t):
    c = canonicalize(t)
    assert alpha_eq(parse_any(show(c), NORM), c)


@given(TERMS, TERMS, st.sampled_from(["x", "y", "z"]))
def test_substitution_respects_alpha(m_, n, x):
    # rename every binder of m_ and compare results
    renamed = _rename_binders(m_)
    assert alpha_eq(renamed, m_)
    assert alpha_eq(substitute(renamed, x, n), substitute(m_, x, n))


@given(TERMS, TERMS, st.sampled_from(["x", "y", "z"]))
def test_substitution_free_variables(m_, n, x):
    r = substitute(m_, x, n)
    if x in free_vars(m_):
        assert free_vars(r) <= (free_vars(m_) - {x}) | free_vars(n)
    else:
        assert alpha_eq(r, m_)


def _rename_binders(t, k=[0]):
    match t:
        case Lam(x, body):
            k[0] += 1
            fresh = f"r{k[0]}"
            return Lam(fresh, _rename_binders(substitute(body, x, Var(fresh))))
        case App(f, a):
            return App(_rename_binders(f), _rename_binders(a))
        case BarSum(entries):
            return BarSum(tuple((lab, _rename_binders(q)) for lab, q in entries))
        case Sum(items):
            return Sum(tuple(_rename_binders(q) for q in items))
        case Prod(items):
            return Prod(tuple(_rename_binders(q) for q in items))
        case Tau(lab, body):
            return Tau(lab, _rename_binders(body))
    return t
