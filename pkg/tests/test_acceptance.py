"""Acceptance gate: ten end-to-end checks, one test per check.

Every assertion is exact rational equality; there are no tolerances
anywhere in this file. Randomized checks run on fixed seeds so the gate
is reproducible, and each check finishes well inside a minute at desk
scale. Run with -v to get one pass or fail line per check.
"""

import os
import random
import subprocess
import sys
from fractions import Fraction

from ruthclass import graded, hpt, linalg, resolution, ruth
from ruthclass.atiyah import (apply_s, atiyah_cocycle, check_compatible,
                              compatible_extension, difference_witness,
                              extend, hat_template, is_extension, lift_form,
                              s_matrix, solve_exactness)
from ruthclass.examples import (build_double, build_normal, build_adjoint,
                                corrupt, jet_log_model, jet_scaling_pair,
                                random_flat_instance, random_resolution,
                                random_rmat, sl2_borel, zoo_pairs)
from ruthclass.graded import EndElement, Form, GradedBundle, commutator, wedge
from ruthclass.linalg import F0, F1
from ruthclass.scalars import CoeffAlgebra

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


def point_bundle(ranks):
    return GradedBundle(CoeffAlgebra.point(), ranks)


def rand_end(bundle, deg, rng, span=2):
    R = bundle.algebra
    e = EndElement(bundle, deg)
    for src in e.sources():
        m, n = e.block_shape(src)
        e.set_block(src, random_rmat(R, rng, m, n, span=span))
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


def rand_hat_quot(pair, bundle, p, q, rng):
    w = hat_template(pair, bundle, p, q)
    for I in w.indices():
        vals = [rand_end(bundle, q, rng) for _ in range(pair.quotient_rank)]
        if any(not e.is_zero() for e in vals):
            w.set(I, vals)
    return w


# ---------------------------------------------------------------------------
# 1. sign conventions

def basis_end_forms(base_rank, bundle):
    R = bundle.algebra
    forms = []
    for arity in range(base_rank + 1):
        for deg in sorted(bundle.end_degrees()):
            probe = EndElement(bundle, deg)
            for src in probe.sources():
                for I in Form(base_rank, arity, "end", R, bundle,
                              deg).indices():
                    e = EndElement(bundle, deg)
                    m, n = e.block_shape(src)
                    B = graded.rzeros(R, m, n)
                    B[0][0] = R.one()
                    e.set_block(src, B)
                    w = Form(base_rank, arity, "end", R, bundle, deg)
                    w.set(I, e)
                    forms.append(w)
    return forms


def test_criterion_01_sign_conventions():
    # graded antisymmetry and Jacobi of the commutator on 200 random
    # homogeneous triples over three coefficient setups, then exhaustive
    # wedge associativity on every basis triple at base rank up to 3
    rng = random.Random(101)
    bundles = [point_bundle({0: 2, -1: 2}),
               point_bundle({0: 1, -1: 2, -2: 1}),
               GradedBundle(CoeffAlgebra.jet(1, 1), {0: 1, -1: 1})]
    for i in range(200):
        bundle = bundles[i % len(bundles)]
        degs = sorted(bundle.end_degrees())
        F = rand_end_form(3, bundle, rng.randint(0, 2), rng.choice(degs), rng)
        G = rand_end_form(3, bundle, rng.randint(0, 2), rng.choice(degs), rng)
        H = rand_end_form(3, bundle, rng.randint(0, 2), rng.choice(degs), rng)
        m, n = F.total_degree(), G.total_degree()
        lhs = commutator(F, G)
        rhs = commutator(G, F).scale_frac(Fraction((-1) ** ((m * n) % 2 + 1)))
        assert lhs.eq(rhs)
        jac_l = commutator(F, commutator(G, H))
        jac_r = commutator(commutator(F, G), H).add(
            commutator(G, commutator(F, H)).scale_frac(
                Fraction((-1) ** ((m * n) % 2))))
        assert jac_l.eq(jac_r)
    for base_rank in (1, 2, 3):
        basis = basis_end_forms(base_rank, point_bundle({0: 1, -1: 1}))
        pair_gh = [[wedge(G, H) for H in basis] for G in basis]
        for F in basis:
            for gi, G in enumerate(basis):
                FG = wedge(F, G)
                for hi, H in enumerate(basis):
                    assert wedge(FG, H).eq(wedge(F, pair_gh[gi][hi]))


# ---------------------------------------------------------------------------
# 2. flatness soundness

def test_criterion_02_flatness_soundness():
    # the flatness verdict against direct operator composition on 100
    # mixed superconnections: the squared operator on every basis form is
    # the wedge action of the curvature components, flat means both
    # vanish, and the reported residual is the lowest nonzero component
    rng = random.Random(102)
    nonflat_seen = 0
    for _ in range(50):
        pair, scA, scL = random_flat_instance(rng)
        for sc in (scA, corrupt(scA, rng)):
            comps = ruth.curvature_components(sc)
            verdict = ruth.validate_flat(sc)
            flat_direct = True
            for F in ruth.vec_basis_forms(sc):
                sq = {}
                for G in ruth.apply_D_form(sc, F).values():
                    for key, W in ruth.apply_D_form(sc, G).items():
                        sq[key] = sq[key].add(W) if key in sq else W
                sq = {k: v for k, v in sq.items() if not v.is_zero()}
                if sq:
                    flat_direct = False
                want = {}
                for C in comps.values():
                    W = wedge(C, F)
                    if not W.is_zero():
                        want[(W.arity, W.vdeg)] = W
                assert sorted(sq) == sorted(want)
                for key, W in want.items():
                    assert sq[key].eq(W)
            assert (verdict is None) == flat_direct
            if verdict is not None:
                tag, k, residual = verdict
                assert tag == "flatness"
                assert not residual.is_zero()
                assert residual.eq(comps[k])
                assert all(comps[j].is_zero() for j in comps if j < k)
                nonflat_seen += 1
    assert nonflat_seen >= 25


# ---------------------------------------------------------------------------
# 3. the cocycle is closed and s squares to zero

def test_criterion_03_cocycle_closed_and_s_squared():
    # s kills the cocycle of every extension over 50 random flat
    # instances, and every assembled s matrix composes to zero with its
    # neighbor
    rng = random.Random(103)
    for _ in range(50):
        pair, scA, scL = random_flat_instance(rng)
        bundle = scA.bundle
        seeded = extend(pair, scA,
                        [rand_end(bundle, 0, rng)
                         for _ in range(pair.quotient_rank)])
        for sc_ext in (extend(pair, scA), scL, seeded):
            alpha = atiyah_cocycle(pair, sc_ext)
            assert apply_s(pair, sc_ext, alpha) == {}
        sc_ext = extend(pair, scA)
        degs = bundle.end_degrees()
        lo, hi = min(degs) - 1, pair.sub_rank + max(degs)
        mats = {t: s_matrix(pair, sc_ext, t) for t in range(lo, hi + 1)}
        for t in range(lo, hi):
            S_t, S_next = mats[t], mats[t + 1]
            if not S_t or not S_next:
                continue
            assert linalg.is_zero(linalg.mul(S_next, S_t)), t


# ---------------------------------------------------------------------------
# 4. two seeds differ by an exact term

def test_criterion_04_two_seed_difference():
    # 25 instances with two independently seeded extensions each: the
    # cocycle difference is exact and the witness reproduces it on the
    # nose
    rng = random.Random(104)
    for _ in range(25):
        pair, scA, scL = random_flat_instance(rng)
        bundle = scA.bundle
        exts = []
        for _ in range(2):
            gseed = [rand_end(bundle, 0, rng)
                     for _ in range(pair.quotient_rank)]
            oseed = None
            if pair.sub_rank >= 1 and bundle.end_rank(-1):
                w = rand_hat_quot(pair, bundle, 1, -1, rng)
                if not w.is_zero():
                    oseed = {2: lift_form(pair, w)}
            exts.append(extend(pair, scA, gseed, oseed))
        e1, e2 = exts
        res = difference_witness(pair, e1, e2)
        assert res.exact is True
        assert res.degree == 1
        back = apply_s(pair, e1, res.witness)
        a1, a2 = atiyah_cocycle(pair, e1), atiyah_cocycle(pair, e2)
        for key in set(a1) | set(a2) | set(back):
            zero = hat_template(pair, bundle, *key)
            d = a1.get(key, zero).sub(a2.get(key, zero))
            assert back.get(key, zero).eq(d), key


# ---------------------------------------------------------------------------
# 5. a witness yields an on-the-nose compatible extension

def test_criterion_05_compatible_extension():
    # every time the solver finds a witness, correcting the extension by
    # it kills the cocycle identically in every arity
    rng = random.Random(105)
    pairs = sorted(zoo_pairs().items())
    solved = 0
    for i in range(14):
        _, pair = pairs[i % len(pairs)]
        scA, scL = random_resolution(pair, rng, k_rank=1 + i % 2,
                                     depth=1 + i % 3)
        for sc_ext in (extend(pair, scA), scL):
            alpha = atiyah_cocycle(pair, sc_ext)
            res = solve_exactness(pair, sc_ext, alpha)
            if not res.exact:
                continue
            solved += 1
            out = compatible_extension(pair, sc_ext, res.witness)
            assert atiyah_cocycle(pair, out) == {}
            assert is_extension(pair, scA, out)
    assert solved >= 8


# ---------------------------------------------------------------------------
# 6. doubles are compatible out of the box

def test_criterion_06_double_bundle():
    # the curvature-desuspension extension of a double has identically
    # zero cocycle for 10 random seeds
    pairs = sorted(zoo_pairs().items())
    for seed in range(10):
        rng = random.Random(1000 + seed)
        _, pair = pairs[seed % len(pairs)]
        scd, sce = build_double(pair, 1 + seed % 2, rng=rng)
        assert check_compatible(pair, scd, sce) == {}


# ---------------------------------------------------------------------------
# 7. the resolution computes the classical class

def test_criterion_07_resolution_cohomology_and_class():
    # hat cohomology over the resolution matches the receptacle over the
    # resolved module in every degree, the projected arity one block is
    # the classical cocycle at chain level, and the vanishing verdicts
    # agree
    rng = random.Random(107)
    pair = sl2_borel()
    fixtures = [(pair, build_normal(pair))]
    pairs = sorted(zoo_pairs().items())
    for i in range(10):
        _, p = pairs[i % len(pairs)]
        fixtures.append((p, random_resolution(p, rng, k_rank=1 + i % 2,
                                              depth=1 + i % 3)))
    verdicts = set()
    for p, (scA, scL) in fixtures:
        contr = resolution.build_contraction(scA.bundle, scA.partial)
        # chain level identity for two extensions: the canonical one and
        # the random one carried by the fixture
        can = extend(p, scA)
        for ext in (can, scL):
            rep = resolution.compare_brst(p, scA, ext, contr)
            assert rep.chain_level_equal is True
            assert rep.dims_resolution == rep.dims_module
            assert rep.equal is True
        # verdicts ride on the canonical extension, whose cocycle sits in
        # the single block the projection reads; the verdict itself does
        # not depend on the extension
        v_res = solve_exactness(p, can, atiyah_cocycle(p, can)).exact
        assert v_res == solve_exactness(p, scL, atiyah_cocycle(p, scL)).exact
        scK = resolution.quotient_ruth(scA, contr)
        extK = extend(p, scK)
        at_k = resolution.classical_atiyah(p, can, contr)
        ak = {} if at_k.is_zero() else {(1, 0): at_k}
        v_mod = solve_exactness(p, extK, ak).exact
        assert v_res == v_mod
        verdicts.add(v_res)
    assert verdicts == {True, False}


# ---------------------------------------------------------------------------
# 8. endomorphism cohomology concentrates on the resolved module

def certified_fixtures():
    out = []
    for name, pair in sorted(zoo_pairs().items()):
        out.append(("normal " + name, build_normal(pair)[0]))
    out.append(("adjoint jet_scaling",
                build_adjoint(jet_scaling_pair().ambient).sc))
    out.append(("adjoint jet_log", build_adjoint(jet_log_model()).sc))
    rng = random.Random(108)
    for i in range(3):
        scA, _ = random_resolution(sl2_borel(), rng, k_rank=1 + i % 2,
                                   depth=1 + i)
        out.append(("random %d" % i, scA))
    return out


def iota_end(contr, M):
    R = contr.algebra
    e = EndElement(contr.bundle, 0)
    B = graded.rmul(R, contr.sigma, graded.rmul(R, M, contr.phi))
    if not graded.ris_zero(R, B):
        e.set_block(0, B)
    return e


def test_criterion_08_end_cohomology_concentration():
    # the bracket-with-partial cohomology vanishes off degree zero and is
    # the endomorphisms of the resolved module in degree zero, realized
    # by the explicit projection and inclusion
    for name, sc in certified_fixtures():
        contr = resolution.build_contraction(sc.bundle, sc.partial)
        assert contr.validate() is None, name
        K0 = contr.k_bundle()
        dims = resolution.end_cohomology_dims(contr)
        for j, d in dims.items():
            want = graded.end_dim(K0, 0) if j == 0 else 0
            assert d == want, (name, j)
        R = contr.algebra
        k = contr.k_rank
        for r in range(k):
            for c in range(k):
                M = graded.rzeros(R, k, k)
                M[r][c] = R.one()
                e = iota_end(contr, M)
                assert contr.partial.commutator(e).is_zero(), name
                assert graded.req(R, contr.project(e), M), name
        # every closed degree zero endo is the inclusion of its
        # projection plus an explicit boundary
        A0 = resolution.ad_partial_matrix(contr, 0)
        degs = sc.bundle.end_degrees()
        for coords in linalg.kernel_basis(A0):
            e = graded.end_unflatten(sc.bundle, 0, coords)
            gap = e.sub(iota_end(contr, contr.project(e)))
            rv = graded.end_flatten(gap)
            if all(x == F0 for x in rv):
                continue
            assert -1 in degs, name
            x = linalg.solve(resolution.ad_partial_matrix(contr, -1), rv)
            assert x is not None, name


# ---------------------------------------------------------------------------
# 9. perturbation and transfer

def test_criterion_09_perturbation_and_transfer():
    # the perturbed contraction passes the contraction identities, its
    # small differential is the quotient covariant derivative computed
    # independently, and the transferred degree one class lands on the
    # classical cocycle of the normal complex
    pair = sl2_borel()
    scA, scL = build_normal(pair)
    contr = resolution.build_contraction(scA.bundle, scA.partial)
    pc = hpt.perturb(scA, contr)
    big = hpt.vec_elem_basis(scA.model, scA.bundle)
    small = hpt.vec_elem_basis(scA.model, contr.k_bundle())
    assert pc.validate(big, small) is None
    assert hpt.small_equals_quotient(pc, scA, contr) is True
    rng = random.Random(109)
    for i in range(3):
        scr, _ = random_resolution(pair, rng, k_rank=1 + i % 2,
                                   depth=1 + i % 3)
        cr = resolution.build_contraction(scr.bundle, scr.partial)
        pcr = hpt.perturb(scr, cr)
        assert pcr.validate(hpt.vec_elem_basis(scr.model, scr.bundle),
                            hpt.vec_elem_basis(scr.model,
                                               cr.k_bundle())) is None
        assert hpt.small_equals_quotient(pcr, scr, cr) is True
    rep = hpt.hom_transfer(pair, scA, scL, scA)
    assert rep.chain_map is True
    assert rep.dims_small == rep.dims_receptacle
    assert rep.matches is True


# ---------------------------------------------------------------------------
# 10. byte determinism of the command line

def test_criterion_10_cli_determinism():
    # every subcommand byte-reproduces its report across three runs and
    # across worker counts 1, 2 and 4
    seed = os.path.join(FIXTURES, "borel_seed.json")
    cmds = [
        ["validate", "--preset", "normal"],
        ["atiyah", "--preset", "normal", "--witness",
         "--extension-seed", seed],
        ["resolve", "--preset", "normal"],
        ["hpt", "--preset", "normal"],
    ]
    for cmd in cmds:
        outs = []
        for workers, reps in (("1", 3), ("2", 1), ("4", 1)):
            env = dict(os.environ, RUTHCLASS_WORKERS=workers)
            for _ in range(reps):
                proc = subprocess.run(
                    [sys.executable, "-m", "ruthclass.cli"] + cmd,
                    capture_output=True, env=env)
                assert proc.returncode == 0, (cmd, proc.stderr)
                outs.append(proc.stdout)
        assert len(set(outs)) == 1, cmd
