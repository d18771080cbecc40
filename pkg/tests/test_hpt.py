import random
from fractions import Fraction

from ruthclass import atiyah, graded, hpt, resolution, ruth
from ruthclass.examples import (build_normal, random_resolution, random_rmat,
                                sl2_borel)
from ruthclass.graded import Connection, EndElement, Form, GradedBundle
from ruthclass.hpt import (dual_bundle, dual_contraction, dual_ruth, elem_of,
                           embed_end, end_ruth, form_contraction, hom_transfer,
                           pair_forms, perturb, small_equals_quotient,
                           tensor_contraction, tensor_ruth, vec_elem_basis)
from ruthclass.resolution import build_contraction


def borel_setup():
    pair = sl2_borel()
    scA, scL = build_normal(pair)
    contr = build_contraction(scA.bundle, scA.partial)
    return pair, scA, scL, contr


def omega_squared_instance():
    """A flat two level module with a nonzero curvature correction: the
    constant gamma along e has curvature -2 gamma, cancelled by [del, w]
    for w = 2 at (h, e)."""
    pair = sl2_borel()
    R = pair.algebra
    sub = pair.sub_model()
    bundle = GradedBundle(R, {0: 1, -1: 1})
    partial = EndElement(bundle, 1)
    partial.set_block(-1, [[R.one()]])
    g_h = EndElement(bundle, 0)
    g_e = EndElement(bundle, 0)
    g_e.set_block(0, [[R.one()]])
    g_e.set_block(-1, [[R.one()]])
    w = Form(2, 2, "end", R, bundle, -1)
    e = EndElement(bundle, -1)
    e.set_block(0, [[R.from_rational(2)]])
    w.set((0, 1), e)
    sc = ruth.SuperConnection(sub, bundle,
                              Connection(bundle, sub.anchor, [g_h, g_e]),
                              partial, {2: w})
    assert ruth.validate_flat(sc) is None
    return pair, sc


# ---------------------------------------------------------------------------
# contractions of form complexes

def test_unperturbed_contraction_axioms():
    pair, scA, scL, contr = borel_setup()
    fc = form_contraction(scA, contr)
    big = vec_elem_basis(scA.model, scA.bundle)
    small = vec_elem_basis(scA.model, contr.k_bundle())
    assert fc.validate(big, small) is None


def test_perturbed_contraction_axioms():
    pair, scA, scL, contr = borel_setup()
    pc = perturb(scA, contr)
    big = vec_elem_basis(scA.model, scA.bundle)
    small = vec_elem_basis(scA.model, contr.k_bundle())
    assert pc.validate(big, small) is None


def test_perturbed_contraction_axioms_on_random_resolution():
    rng = random.Random(51)
    pair = sl2_borel()
    scA, scL = random_resolution(pair, rng)
    contr = build_contraction(scA.bundle, scA.partial)
    pc = perturb(scA, contr)
    big = vec_elem_basis(scA.model, scA.bundle)
    small = vec_elem_basis(scA.model, contr.k_bundle())
    assert pc.validate(big, small) is None


def test_small_differential_is_the_quotient_connection():
    pair, scA, scL, contr = borel_setup()
    pc = perturb(scA, contr)
    assert small_equals_quotient(pc, scA, contr) is True
    rng = random.Random(52)
    scA2, _ = random_resolution(pair, rng)
    c2 = build_contraction(scA2.bundle, scA2.partial)
    assert small_equals_quotient(perturb(scA2, c2), scA2, c2) is True


# ---------------------------------------------------------------------------
# duals

def test_dual_bundle_and_ranks():
    pair, scA, scL, contr = borel_setup()
    dE = dual_ruth(scA)
    assert {d: dE.bundle.rank(d) for d in dE.bundle.degrees()} == {0: 3, 1: 2}
    endE = end_ruth(scA)
    assert {d: endE.bundle.rank(d) for d in endE.bundle.degrees()} == \
        {-1: 6, 0: 13, 1: 6}


def total_pairing(xi_elem, v_elem):
    out = {}
    for F in xi_elem.values():
        for G in v_elem.values():
            P = pair_forms(F, G)
            if P.is_zero():
                continue
            out[P.arity] = out[P.arity].add(P) if P.arity in out else P
    return {k: v for k, v in out.items() if not v.is_zero()}


def scal_d(model, elem):
    out = {}
    for F in elem.values():
        G = graded.cov_d(model, None, F)
        if G.is_zero():
            continue
        out[G.arity] = out[G.arity].add(G) if G.arity in out else G
    return {k: v for k, v in out.items() if not v.is_zero()}


def sign_by_total_degree(elem):
    return {k: (F if (k[0] + k[1]) % 2 == 0 else F.scale_frac(Fraction(-1)))
            for k, F in elem.items()}


def rand_vec_elem(model, bundle, p, lev, rng):
    R = bundle.algebra
    F = Form(model.rank, p, "vec", R, bundle, lev)
    for I in F.indices():
        F.set(I, [R.from_rational(rng.randint(-2, 2))
                  for _ in range(bundle.rank(lev))])
    return elem_of(F)


def scal_eq(a, b):
    keys = set(a) | set(b)
    for k in keys:
        x = a.get(k)
        y = b.get(k)
        if x is None:
            x = y.clone_empty()
        if y is None:
            y = x.clone_empty()
        if not x.eq(y):
            return False
    return True


def test_dual_is_adjoint_for_the_pairing():
    # d<xi, v> = <D'xi, v> + (-1)^(deg xi) <xi, D v> over both fixtures,
    # including one with a curvature correction
    rng = random.Random(53)
    fixtures = []
    pair, scA, scL, contr = borel_setup()
    fixtures.append((pair, scA))
    fixtures.append(omega_squared_instance())
    for pair, sc in fixtures:
        dsc = dual_ruth(sc)
        db = dsc.bundle
        for _ in range(12):
            p = rng.randint(0, 2)
            q = rng.randint(0, 2)
            l = rng.choice(sorted(db.degrees()))
            m = rng.choice(sorted(sc.bundle.degrees()))
            xi = rand_vec_elem(sc.model, db, p, l, rng)
            v = rand_vec_elem(sc.model, sc.bundle, q, m, rng)
            lhs = scal_d(sc.model, total_pairing(xi, v))
            rhs = total_pairing(ruth.apply_D(dsc, xi), v)
            rhs2 = total_pairing(sign_by_total_degree(xi), ruth.apply_D(sc, v))
            for k, F in rhs2.items():
                rhs[k] = rhs[k].add(F) if k in rhs else F
            rhs = {k: v2 for k, v2 in rhs.items() if not v2.is_zero()}
            assert scal_eq(lhs, rhs), (p, q, l, m)


def test_dual_contraction_sides():
    pair, scA, scL, contr = borel_setup()
    dc = dual_contraction(contr)
    assert dc.validate() is None
    assert dc.k_rank == contr.k_rank


# ---------------------------------------------------------------------------
# tensors and the endomorphism identification

def test_tensor_ruth_flat_and_contracts():
    pair, scA, scL, contr = borel_setup()
    endE = end_ruth(scA)
    assert ruth.validate_flat(endE) is None
    cT = tensor_contraction(dual_contraction(contr), contr, endE)
    assert cT.validate() is None
    assert cT.k_rank == 1


def test_embed_end_is_a_chain_map():
    # the identification End(E) = E* (x) E must send the graded adjoint of
    # the superconnection to the tensor operator, component by component
    rng = random.Random(54)
    cases = []
    pair, scA, scL, contr = borel_setup()
    cases.append(scA)
    cases.append(omega_squared_instance()[1])
    for sc in cases:
        dE = dual_ruth(sc)
        endE = tensor_ruth(dE, sc)
        db, bundle, tb = dE.bundle, sc.bundle, endE.bundle
        degs = sorted(bundle.end_degrees())
        for q in degs:
            if graded.end_dim(bundle, q) == 0:
                continue
            e = EndElement(bundle, q)
            for src in e.sources():
                mm, nn = e.block_shape(src)
                e.set_block(src, random_rmat(sc.algebra, rng, mm, nn, span=2))
            F = Form(sc.model.rank, 0, "vec", sc.algebra, tb, q)
            F.set((), embed_end(e, db, bundle, tb))
            img = ruth.apply_D(endE, elem_of(F))

            ad0 = sc.partial.commutator(e)
            want0 = Form(sc.model.rank, 0, "vec", sc.algebra, tb, q + 1)
            want0.set((), embed_end(ad0, db, bundle, tb))
            got0 = img.get((0, q + 1), want0.clone_empty())
            assert got0.eq(want0), ("partial", q)

            want1 = Form(sc.model.rank, 1, "vec", sc.algebra, tb, q)
            for i in range(sc.model.rank):
                adi = sc.conn.nabla_end(i, e)
                want1.set((i,), embed_end(adi, db, bundle, tb))
            got1 = img.get((1, q), want1.clone_empty())
            assert got1.eq(want1), ("nabla", q)

            if sc.omegas:
                w = sc.omega(2)
                want2 = Form(sc.model.rank, 2, "vec", sc.algebra, tb, q - 1)
                for I, om in w.values.items():
                    want2.set(I, embed_end(om.commutator(e), db, bundle, tb))
                got2 = img.get((2, q - 1), want2.clone_empty())
                assert got2.eq(want2), ("omega", q)


# ---------------------------------------------------------------------------
# transfer of the cocycle

def test_hom_transfer_on_the_normal_complex():
    pair, scA, scL, contr = borel_setup()
    rep = hom_transfer(pair, scA, scL, scA)
    assert rep.chain_map is True
    assert rep.dims_small == {0: 0, 1: 1, 2: 1}
    assert rep.dims_receptacle == {0: 0, 1: 1, 2: 1}
    assert rep.matches is True
    assert rep.witness == []


def test_hom_transfer_chain_map_with_curvature_corrections():
    # exercises the endo degree -1 components of the embedding
    pair, sc = omega_squared_instance()
    scn, _ = build_normal(pair)
    sc_ext = atiyah.extend(pair, sc)
    rep = hom_transfer(pair, sc, sc_ext, scn)
    assert rep.chain_map is True
