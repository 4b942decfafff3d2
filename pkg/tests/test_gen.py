from filterbench.approximants import is_bohm_normal
from filterbench.gen import Generator, label_pool, normal_forms, shrink, value_pool
from filterbench.model import shipped_model
from filterbench.syntax import Lam, Omega, free_vars, is_pure, parse_test, show, size

DINF = shipped_model("dinf")
NORM = shipped_model("norm")


def test_same_seed_same_output():
    a, b = Generator(NORM, 7), Generator(NORM, 7)
    assert [show(a.query(8).term) for _ in range(20)] == [show(b.query(8).term) for _ in range(20)]


def test_pools_exclude_top():
    for m in (DINF, NORM):
        assert all(not m.is_top(t) for t in label_pool(m))
        assert m.is_top(value_pool(m)[0])


def test_queries_cover_free_variables():
    g = Generator(DINF, 1)
    for _ in range(100):
        q = g.query(g.rng.randint(2, 12))
        assert {x for x, _ in q.env} == free_vars(q.term)
        assert not DINF.is_top(q.target)


def test_closed_tests_are_closed():
    g = Generator(NORM, 2)
    assert all(not free_vars(g.closed_test(8)) for _ in range(100))


def test_pure_generation():
    g = Generator(DINF, 3, pure=True)
    assert all(is_pure(g.term(10, ("x",))) for _ in range(100))


def test_normal_forms():
    forms = normal_forms(5)
    assert len(forms) == 115
    assert len(set(forms)) == len(forms)
    for s in forms:
        assert is_bohm_normal(s) and size(s) <= 5 and free_vars(s) <= {"x", "y"}
        assert not (isinstance(s, Lam) and isinstance(s.body, Omega))


def test_normal_forms_sizes_grow():
    assert [len(normal_forms(n)) for n in range(1, 4)] == [3, 6, 16]


def test_shrink_keeps_property():
    t = parse_test(r"tau[p](\a. a) * tau[q](x) + tau[p](\b. (\c. c) b)", NORM)
    small = shrink(t, lambda u: "tau[q]" in show(u))
    assert "tau[q]" in show(small)
    assert size(small) < size(t)
