import random
from fractions import Fraction

from hypothesis import given, settings, strategies as st

from ruthclass import examples, graded, linalg
from ruthclass.graded import EndElement, Form, GradedBundle, commutator, splits, wedge
from ruthclass.scalars import CoeffAlgebra

import _oracles as oracle


def point_bundle(ranks):
    return GradedBundle(CoeffAlgebra.point(), ranks)


def rand_end(bundle, deg, rng, span=2):
    R = bundle.algebra
    e = EndElement(bundle, deg)
    for src in e.sources():
        m, n = e.block_shape(src)
        e.set_block(src, examples.random_rmat(R, rng, m, n, span=span))
    return e


def rand_end_form(base_rank, bundle, arity, deg, rng, density=0.8):
    R = bundle.algebra
    w = Form(base_rank, arity, "end", R, bundle, deg)
    for I in w.indices():
        if rng.random() > density:
            continue
        e = rand_end(bundle, deg, rng)
        if not e.is_zero():
            w.set(I, e)
    return w


def rand_vec_form(base_rank, bundle, arity, lev, rng):
    R = bundle.algebra
    w = Form(base_rank, arity, "vec", R, bundle, lev)
    for I in w.indices():
        w.set(I, [R.from_rational(rng.randint(-2, 2))
                  for _ in range(bundle.rank(lev))])
    return w


# ---------------------------------------------------------------------------
# shuffle machinery

def test_splits_signs_match_inversion_oracle():
    I = (0, 1, 2, 3)
    for k in range(5):
        for S, T, sg in splits(I, k):
            assert sg == oracle.inversion_sign(S + T)
            assert tuple(sorted(S + T)) == I


def test_eval_at_alternation():
    rng = random.Random(0)
    bundle = point_bundle({0: 2, -1: 1})
    w = rand_end_form(3, bundle, 2, 0, rng, density=1.0)
    assert w.eval_at((1, 1)).is_zero()
    a = w.eval_at((0, 2))
    b = w.eval_at((2, 0))
    assert a.eq(b.scale_frac(Fraction(-1)))


# ---------------------------------------------------------------------------
# frozen one-form examples

def test_wedge_end_vec_frozen():
    # (xi_0 (x) M) ^ (xi_1 (x) v) = + xi_0 ^ xi_1 (x) M v for a degree
    # zero M; swapping the slots flips the sign
    bundle = point_bundle({0: 2})
    R = bundle.algebra
    M = EndElement(bundle, 0)
    M.set_block(0, [[R.from_rational(1), R.from_rational(2)],
                    [R.from_rational(3), R.from_rational(4)]])
    F = Form(2, 1, "end", R, bundle, 0)
    F.set((0,), M)
    G = Form(2, 1, "vec", R, bundle, 0)
    G.set((1,), [R.from_rational(5), R.from_rational(7)])
    W = wedge(F, G)
    assert [c[0] for c in W.get((0, 1))] == [Fraction(19), Fraction(43)]

    Fs = Form(2, 1, "end", R, bundle, 0)
    Fs.set((1,), M)
    Gs = Form(2, 1, "vec", R, bundle, 0)
    Gs.set((0,), [R.from_rational(5), R.from_rational(7)])
    Ws = wedge(Fs, Gs)
    assert [c[0] for c in Ws.get((0, 1))] == [Fraction(-19), Fraction(-43)]


def test_commutator_end_one_forms_frozen():
    # [xi_0 (x) M, xi_1 (x) N] = xi_0 ^ xi_1 (x) (MN - NM)
    bundle = point_bundle({0: 2})
    R = bundle.algebra
    M = EndElement(bundle, 0)
    M.set_block(0, [[R.from_rational(0), R.from_rational(1)],
                    [R.from_rational(0), R.from_rational(0)]])
    N = EndElement(bundle, 0)
    N.set_block(0, [[R.from_rational(0), R.from_rational(0)],
                    [R.from_rational(1), R.from_rational(0)]])
    F = Form(2, 1, "end", R, bundle, 0)
    F.set((0,), M)
    G = Form(2, 1, "end", R, bundle, 0)
    G.set((1,), N)
    C = commutator(F, G)
    got = C.get((0, 1)).block(0)
    assert [[c[0] for c in row] for row in got] == \
        [[Fraction(1), Fraction(0)], [Fraction(0), Fraction(-1)]]


# ---------------------------------------------------------------------------
# wedge against the partition oracle

def end_blocks(e):
    return {src: [[c for c in row] for row in e.blocks[src]]
            for src in e.blocks if not graded.ris_zero(e.bundle.algebra, e.blocks[src])}


def own_compose(R, d2, b1, b2):
    """Blockwise compose of {src: matrix} dicts, second applied first."""
    out = {}
    for src, B in b2.items():
        A = b1.get(src + d2)
        if A is None:
            continue
        rows, inner, cols = len(A), len(B), len(B[0])
        M = [[R.zero() for _ in range(cols)] for _ in range(rows)]
        for r in range(rows):
            for c in range(cols):
                acc = R.zero()
                for t in range(inner):
                    acc = R.add(acc, R.mul(A[r][t], B[t][c]))
                M[r][c] = acc
        out[src] = M
    return out


def blocks_add(R, a, b):
    out = dict(a)
    for src, M in b.items():
        out[src] = graded.radd(R, out[src], M) if src in out else M
    return out


def blocks_scale(R, s, a):
    return {src: graded.rfrac_mul(R, Fraction(s), M) for src, M in a.items()}


def test_wedge_matches_partition_oracle():
    rng = random.Random(4)
    for algebra in (CoeffAlgebra.point(), CoeffAlgebra.jet(1, 1)):
        bundle = GradedBundle(algebra, {0: 2, -1: 1})
        R = algebra
        for d1, d2 in [(0, 0), (1, -1), (-1, 0), (1, 0)]:
            for a1, a2 in [(1, 1), (1, 2), (2, 1), (0, 2)]:
                F = rand_end_form(3, bundle, a1, d1, rng)
                G = rand_end_form(3, bundle, a2, d2, rng)
                W = wedge(F, G)
                o = oracle.wedge_oracle(
                    {I: end_blocks(e) for I, e in F.values.items()},
                    {I: end_blocks(e) for I, e in G.values.items()},
                    d1, a2,
                    lambda x, y: own_compose(R, d2, x, y),
                    lambda x, y: blocks_add(R, x, y),
                    lambda s, x: blocks_scale(R, s, x))
                for I in W.indices():
                    got = end_blocks(W.get(I)) if W.get(I) is not None else {}
                    want = {src: M for src, M in o.get(I, {}).items()
                            if not graded.ris_zero(R, M)}
                    assert got == want, (d1, d2, a1, a2, I)


# ---------------------------------------------------------------------------
# graded algebra laws

def test_commutator_graded_antisymmetry_random():
    rng = random.Random(5)
    bundle = point_bundle({0: 2, -1: 2})
    for _ in range(40):
        a1, a2 = rng.randint(0, 2), rng.randint(0, 2)
        d1, d2 = rng.choice([-1, 0, 1]), rng.choice([-1, 0, 1])
        F = rand_end_form(3, bundle, a1, d1, rng)
        G = rand_end_form(3, bundle, a2, d2, rng)
        m, n = F.total_degree(), G.total_degree()
        lhs = commutator(F, G)
        rhs = commutator(G, F).scale_frac(Fraction((-1) ** ((m * n) % 2 + 1)))
        assert lhs.eq(rhs)


def test_commutator_graded_jacobi_random():
    rng = random.Random(6)
    bundle = point_bundle({0: 2, -1: 1})
    for _ in range(25):
        arities = [rng.randint(0, 1) for _ in range(3)]
        degs = [rng.choice([-1, 0, 1]) for _ in range(3)]
        F = rand_end_form(2, bundle, arities[0], degs[0], rng)
        G = rand_end_form(2, bundle, arities[1], degs[1], rng)
        H = rand_end_form(2, bundle, arities[2], degs[2], rng)
        m, n = F.total_degree(), G.total_degree()
        lhs = commutator(F, commutator(G, H))
        rhs = commutator(commutator(F, G), H).add(
            commutator(G, commutator(F, H)).scale_frac(
                Fraction((-1) ** ((m * n) % 2))))
        assert lhs.eq(rhs)


def test_wedge_associative_exhaustive_small():
    # every basis triple of end forms on a rank 2 base over a two level
    # bundle, all arities that fit
    rng = random.Random(7)
    bundle = point_bundle({0: 1, -1: 1})
    R = bundle.algebra
    forms = []
    for arity in (0, 1):
        for deg in (-1, 0, 1):
            probe = EndElement(bundle, deg)
            for src in probe.sources():
                for I in Form(2, arity, "end", R, bundle, deg).indices():
                    e = EndElement(bundle, deg)
                    m, n = e.block_shape(src)
                    B = graded.rzeros(R, m, n)
                    B[0][0] = R.one()
                    e.set_block(src, B)
                    w = Form(2, arity, "end", R, bundle, deg)
                    w.set(I, e)
                    forms.append(w)
    for F in forms:
        for G in forms:
            for H in forms:
                lhs = wedge(wedge(F, G), H)
                rhs = wedge(F, wedge(G, H))
                assert lhs.eq(rhs)


def test_wedge_end_vec_associative():
    rng = random.Random(8)
    bundle = point_bundle({0: 2, -1: 1})
    for _ in range(20):
        F = rand_end_form(2, bundle, rng.randint(0, 1), rng.choice([-1, 0, 1]), rng)
        G = rand_end_form(2, bundle, rng.randint(0, 1), rng.choice([-1, 0, 1]), rng)
        v = rand_vec_form(2, bundle, rng.randint(0, 1), rng.choice([-1, 0]), rng)
        assert wedge(wedge(F, G), v).eq(wedge(F, wedge(G, v)))


# ---------------------------------------------------------------------------
# coordinates

@given(st.lists(st.fractions(min_value=-3, max_value=3, max_denominator=2),
                min_size=12, max_size=12))
@settings(max_examples=40, deadline=None)
def test_form_flatten_round_trip(coords):
    bundle = point_bundle({0: 2, -1: 1})
    tmpl = Form(2, 1, "end", bundle.algebra, bundle, 0)
    dim = graded.form_dim(tmpl)
    assert dim <= 12
    w = graded.form_unflatten(tmpl, coords[:dim])
    back = graded.form_flatten(w)
    assert back == coords[:dim]


def test_end_flatten_round_trip():
    rng = random.Random(9)
    bundle = point_bundle({0: 2, -1: 2})
    for deg in (-1, 0, 1):
        e = rand_end(bundle, deg, rng)
        coords = graded.end_flatten(e)
        assert len(coords) == graded.end_dim(bundle, deg)
        back = graded.end_unflatten(bundle, deg, coords)
        assert back.eq(e)
