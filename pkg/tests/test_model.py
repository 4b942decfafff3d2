import pytest
from hypothesis import given, strategies as st

from filterbench.errors import ModelError, ParseError, ResourceError
from filterbench.model import (
    OMEGA,
    SHIPPED,
    StratWitness,
    arrow,
    atom,
    check_model,
    eq,
    ext_of,
    inter,
    inter_all,
    leq,
    meet,
    model_to_text,
    parse_model,
    shipped_model,
    sp_search,
    sp_verify,
    sp_verify_closure,
    type_universe,
    u_truncation,
    unfolding_leq,
    z_truncation,
)

STAR = atom("*")
P, Q = atom("p"), atom("q")


def T(m, text):
    return m.parse_type(text)


# ext_of


def test_ext_of_star_in_dinf(dinf):
    assert ext_of(STAR, dinf) == {(OMEGA, STAR)}


def test_ext_of_top_is_empty(models):
    for m in models.values():
        assert ext_of(OMEGA, m) == frozenset()


def test_ext_of_intersection_is_union(norm):
    assert ext_of(inter(arrow(P, Q), P), norm) == {(P, Q), (Q, P)}


def test_ext_of_unknown_atom(dinf):
    with pytest.raises(ModelError):
        ext_of(atom("nope"), dinf)


# meet, leq, eq


def test_meet_with_top_is_neutral(models):
    for m in models.values():
        for t in type_universe(m, 2):
            assert eq(meet(t, OMEGA, m), t, m)


def test_meet_in_norm(norm):
    assert norm.canon(meet(P, Q, norm)) == Q


def test_meet_of_star_and_its_arrow(dinf):
    assert dinf.canon(meet(arrow(OMEGA, STAR), STAR, dinf)) == STAR


def test_everything_below_top(models):
    for m in models.values():
        for t in type_universe(m, 2):
            assert leq(t, OMEGA, m)


def test_norm_order(norm):
    assert leq(Q, P, norm)
    assert not leq(P, Q, norm)


def test_top_not_below_star(dinf):
    assert not leq(OMEGA, STAR, dinf)
    assert unfolding_leq(dinf, OMEGA, STAR, 2) is False


def test_z_successor_arrow(models):
    z = models["z3"]
    for n in range(4):
        assert leq(arrow(OMEGA, atom(str((n + 1) % 4))), atom(str(n)), z)


def test_star_equals_its_arrow(dinf):
    assert eq(STAR, arrow(OMEGA, STAR), dinf)
    assert not eq(STAR, arrow(STAR, STAR), dinf)
    assert unfolding_leq(dinf, arrow(STAR, STAR), STAR, 3) is False


def test_arrow_to_top_collapses(models):
    for m in models.values():
        for t in type_universe(m, 1):
            assert m.is_top(arrow(t, OMEGA))


def test_leq_budget_raises():
    m = shipped_model("kerth")
    m.leq_budget = 3
    m.clear_caches()
    with pytest.raises(ResourceError):
        m.leq(T(m, "(b -> a) -> a"), T(m, "(c /\\ d -> b) /\\ b"))


# validation


def test_shipped_models_are_valid(models):
    for name, m in models.items():
        assert check_model(m) == [], name


def test_commutativity_violation():
    text = ("model broken\natoms w a b\nmeet a b = a\nmeet b a = b\n"
            "ext a = (w -> a)\next b = (w -> b)\n")
    kinds = {v.kind for v in check_model(parse_model(text, strict=False))}
    assert "commutativity" in kinds


def test_strict_parse_requires_complete_tables():
    with pytest.raises(ModelError):
        parse_model("model m\natoms w a b\next a = (w -> a)\next b = (w -> b)\n")
    with pytest.raises(ModelError):
        parse_model("model m\natoms w a\n")


def test_altered_norm_fails_reconstruction(norm):
    text = model_to_text(norm).replace("ext q = (p -> q)", "ext q = (q -> q)")
    kinds = {v.kind for v in check_model(parse_model(text, strict=False))}
    assert "ext-reconstruction" in kinds


def test_missing_ext_is_reported():
    kinds = {v.kind for v in check_model(parse_model("model m\natoms w a\n", strict=False))}
    assert "missing-ext" in kinds


@pytest.mark.parametrize("text", [
    "model m\nmeet a b = a\n",                       # meet before atoms
    "model m\natoms w a\next a = (w -> \n",           # truncated type
    "model m\natoms w a\next a = (w -> zz)\n",        # unknown atom
    "model m\natoms w a\nfrobnicate a\n",             # unknown directive
])
def test_dsl_errors(text):
    with pytest.raises((ParseError, ModelError)):
        parse_model(text)


def test_model_text_roundtrip(models):
    for m in models.values():
        again = parse_model(model_to_text(m))
        assert again.atoms == m.atoms
        for a in type_universe(m, 1):
            for b in type_universe(m, 1):
                assert again.leq(a, b) == m.leq(a, b)


def test_truncations_are_valid():
    for k in range(1, 6):
        assert check_model(parse_model(z_truncation(k))) == []
    for k in range(1, 4):
        assert check_model(parse_model(u_truncation(k))) == []


# stratified positivity


def test_dinf_witness(dinf):
    assert sp_verify(dinf, StratWitness({"*": 1}, {"*": False})) == []


def test_norm_witness(norm):
    assert sp_verify(norm, StratWitness({"p": 1, "q": 1}, {"p": True, "q": False})) == []


def test_norm_meet_polarity(norm):
    # p /\ q = q, so the polarity of q must be the conjunction of both
    bad = sp_verify(norm, StratWitness({"p": 1, "q": 1}, {"p": False, "q": True}))
    assert [v.kind for v in bad] == ["meet-polarity"]


def test_norm_wrong_polarity(norm):
    assert sp_verify(norm, StratWitness({"p": 1, "q": 1}, {"p": True, "q": True}))


def test_pinf_violates_alternation(pinf):
    for pol in (True, False):
        bad = sp_verify(pinf, StratWitness({"*": 1}, {"*": pol}))
        assert any(v.kind == "source-polarity" for v in bad)
    assert sp_search(pinf) is None


def test_z_truncation_rank_equal():
    w = sp_search(parse_model(z_truncation(3)))
    assert w is not None
    assert len(set(w.rank.values())) == 1


def test_u_truncation_not_sp():
    assert sp_search(parse_model(u_truncation(2))) is None


def test_trivial_model_sp():
    w = sp_search(parse_model("model t\natoms w\n"))
    assert w is not None and w.rank == {}


def test_search_bound():
    with pytest.raises(ResourceError):
        sp_search(parse_model(z_truncation(8)))


def test_search_results_verify(models):
    for m in models.values():
        w = sp_search(m)
        if w is not None:
            assert sp_verify(m, w) == []
            assert sp_verify_closure(m, w, 2) == []


def test_kerth_not_sp(kerth):
    assert sp_search(kerth) is None


# properties over sampled universes


def _universe(name, depth):
    return type_universe(shipped_model(name), depth)


UNIVERSES = {name: _universe(name, 2) for name in SHIPPED}


def _triples(name):
    u = UNIVERSES[name]
    return st.tuples(st.sampled_from(u), st.sampled_from(u), st.sampled_from(u))


@pytest.mark.parametrize("name", SHIPPED)
@given(data=st.data())
def test_leq_preorder(models, name, data):
    m = models[name]
    a, b, c = data.draw(_triples(name))
    assert m.leq(a, a)
    if m.leq(a, b) and m.leq(b, c):
        assert m.leq(a, c)


@pytest.mark.parametrize("name", SHIPPED)
@given(data=st.data())
def test_meet_is_glb(models, name, data):
    m = models[name]
    a, b, c = data.draw(_triples(name))
    ab = m.meet(a, b)
    assert m.leq(ab, a) and m.leq(ab, b)
    if m.leq(c, a) and m.leq(c, b):
        assert m.leq(c, ab)


@pytest.mark.parametrize("name", SHIPPED)
def test_ext_reconstruction(models, name):
    m = models[name]
    for a in m.atoms:
        rebuilt = inter_all(arrow(s, t) for s, t in m.ext_of(atom(a)))
        assert m.eq(atom(a), rebuilt)


@pytest.mark.parametrize("name", SHIPPED)
@given(data=st.data())
def test_leq_matches_unfolding(models, name, data):
    m = models[name]
    a, b, _ = data.draw(_triples(name))
    for k in (1, 2, 3):
        r = unfolding_leq(m, a, b, k)
        if r is not None:
            assert r == m.leq(a, b)


@pytest.mark.parametrize("name", SHIPPED)
def test_canon_is_idempotent_and_equivalent(models, name):
    m = models[name]
    for t in UNIVERSES[name]:
        c = m.canon(t)
        assert m.canon(c) == c
        assert m.eq(c, t)
