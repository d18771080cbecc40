"""Atiyah cocycles of pairs and the differential they are closed under.

The receptacle is the hat complex: blocks Omega^k(A, Ann (x) End_j(E)) with
Ann the annihilator of the subalgebroid, realized as quotient-slot forms
over the sub directions. The differential is operational:

    s = restrict o (adjoint extended superconnection) o lift,

where lift places a block form on the multi-indices with exactly one
quotient direction and restrict reads those slots back. The cocycle of an
extension is the restriction of its curvature components, one arity up.

Everything here is exact; solvability questions become rational linear
systems and a failed solve is returned with a separating certificate, not
an error estimate.
"""

import itertools
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from . import graded, linalg, ruth
from .graded import Connection, EndElement, Form, commutator, cov_d, wedge
from .linalg import F0, F1

WORKERS_ENV = "RUTHCLASS_WORKERS"


class CocycleError(Exception):
    pass


# ---------------------------------------------------------------------------
# extensions

def extend(pair, sc, gamma_seed=None, omega_seed=None):
    """Canonical extension of a sub-direction superconnection to the
    ambient directions: seeded (or zero) connection blocks on quotient
    directions, curvature corrections extended by zero."""
    assert sc.model.rank == pair.sub_rank
    bundle = sc.bundle
    amb = pair.ambient
    q = pair.quotient_rank
    if gamma_seed is None:
        gamma_seed = [EndElement(bundle, 0) for _ in range(q)]
    assert len(gamma_seed) == q
    gammas = list(sc.conn.gammas) + list(gamma_seed)
    omegas = {}
    for k, w in sc.omegas.items():
        v = Form(amb.rank, k, "end", sc.algebra, bundle, 1 - k)
        for I, e in w.values.items():
            v.set(I, e)
        omegas[k] = v
    if omega_seed:
        for k, w in omega_seed.items():
            omegas[k] = omegas[k].add(w) if k in omegas else w
    return ruth.SuperConnection(amb, bundle,
                                Connection(bundle, amb.anchor, gammas),
                                sc.partial, omegas)


def restrict_superconnection(pair, sc_ext):
    """Forget the quotient directions of an ambient superconnection; the
    result is the sub-direction representation it extends."""
    assert sc_ext.model.rank == pair.ambient.rank
    rA = pair.sub_rank
    sub = pair.sub_model()
    bundle = sc_ext.bundle
    omegas = {}
    for k, w in sc_ext.omegas.items():
        if k > rA:
            continue
        v = Form(rA, k, "end", sc_ext.algebra, bundle, 1 - k)
        for I, e in w.values.items():
            if all(i < rA for i in I):
                v.set(I, e)
        if not v.is_zero():
            omegas[k] = v
    conn = Connection(bundle, sub.anchor, list(sc_ext.conn.gammas[:rA]))
    return ruth.SuperConnection(sub, bundle, conn, sc_ext.partial, omegas)


def is_extension(pair, sc_sub, sc_ext):
    """Does sc_ext restrict to sc_sub along the sub directions?"""
    rA = pair.sub_rank
    if not sc_ext.partial.eq(sc_sub.partial):
        return False
    for i in range(rA):
        if not sc_ext.conn.gammas[i].eq(sc_sub.conn.gammas[i]):
            return False
    ks = set(sc_sub.omegas) | set(sc_ext.omegas)
    for k in ks:
        a = sc_sub.omega(k)
        b = sc_ext.omega(k)
        for I in a.indices():
            if not a.get(I).eq(b.get(I)):
                return False
    return True


# ---------------------------------------------------------------------------
# lift and restrict

def lift_form(pair, w):
    """Place a quotient-slot form on the L multi-indices with exactly one
    quotient direction; the quotient index sorts last, so no signs."""
    rA = pair.sub_rank
    out = Form(pair.ambient.rank, w.arity + 1, "end", w.algebra, w.bundle, w.vdeg)
    for I, vals in w.values.items():
        for m, e in enumerate(vals):
            if not e.is_zero():
                out.set(I + (rA + m,), e)
    return out


def restrict_form(pair, F):
    """Read the exactly-one-quotient-index slots of an End-valued form on
    the ambient directions back into a quotient-slot form."""
    rA, q = pair.sub_rank, pair.quotient_rank
    assert F.arity >= 1
    out = Form(rA, F.arity - 1, "quot", F.algebra, F.bundle, F.vdeg, q)
    for I in itertools.combinations(range(rA), F.arity - 1):
        vals = [F.get(I + (rA + m,)) for m in range(q)]
        if any(not e.is_zero() for e in vals):
            out.set(I, vals)
    return out


def adjoint_d(sc, F):
    """Adjoint action of a superconnection on an End-valued form, split by
    (arity, endo degree)."""
    out = {}

    def put(G):
        if G.is_zero():
            return
        key = (G.arity, G.vdeg)
        out[key] = out[key].add(G) if key in out else G

    put(cov_d(sc.model, sc.conn, F))
    put(commutator(sc.partial_form(), F))
    for k in sorted(sc.omegas):
        put(commutator(sc.omegas[k], F))
    return out


def s_apply(pair, sc_ext, w):
    """The hat differential on one block form; returns {(arity, endo): Form}
    in quotient-slot shape."""
    lifted = lift_form(pair, w)
    out = {}
    for G in adjoint_d(sc_ext, lifted).values():
        r = restrict_form(pair, G)
        if r.is_zero():
            continue
        key = (r.arity, r.vdeg)
        out[key] = out[key].add(r) if key in out else r
    return out


# ---------------------------------------------------------------------------
# block bookkeeping

def hat_template(pair, bundle, k, j):
    return Form(pair.sub_rank, k, "quot", bundle.algebra, bundle, j,
                pair.quotient_rank)


def hat_blocks(pair, bundle, t):
    """The (arity, endo degree) blocks of total degree t, in scan order."""
    out = []
    for k in range(pair.sub_rank + 1):
        j = t - k
        if bundle.end_rank(j) == 0 or pair.quotient_rank == 0:
            continue
        out.append((k, j))
    return out


def hat_dim(pair, bundle, t):
    total = 0
    for (k, j) in hat_blocks(pair, bundle, t):
        total += graded.form_dim(hat_template(pair, bundle, k, j))
    return total


def hat_flatten(pair, bundle, t, forms):
    """forms: {(k, j): Form}; missing blocks are zero."""
    out = []
    for (k, j) in hat_blocks(pair, bundle, t):
        F = forms.get((k, j))
        if F is None:
            F = hat_template(pair, bundle, k, j)
        out.extend(graded.form_flatten(F))
    return out


def hat_unflatten(pair, bundle, t, coords):
    out = {}
    pos = 0
    for (k, j) in hat_blocks(pair, bundle, t):
        tmpl = hat_template(pair, bundle, k, j)
        d = graded.form_dim(tmpl)
        F = graded.form_unflatten(tmpl, coords[pos:pos + d])
        pos += d
        if not F.is_zero():
            out[(k, j)] = F
    assert pos == len(coords)
    return out


def worker_count():
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise CocycleError("%s must be a positive integer, got %r" % (WORKERS_ENV, raw))
    if n < 1:
        raise CocycleError("%s must be a positive integer, got %r" % (WORKERS_ENV, raw))
    return n


def s_matrix(pair, sc_ext, t):
    """Rational matrix of the hat differential from total degree t to t+1.

    Columns are assembled independently per basis slot and concatenated in
    index order, so the result is bytewise identical for any worker count
    set through the environment."""
    bundle = sc_ext.bundle
    dim_in = hat_dim(pair, bundle, t)
    dim_out = hat_dim(pair, bundle, t + 1)

    def column(idx):
        coords = [F0] * dim_in
        coords[idx] = F1
        w = hat_unflatten(pair, bundle, t, coords)
        img = {}
        for F in w.values():
            for key, G in s_apply(pair, sc_ext, F).items():
                img[key] = img[key].add(G) if key in img else G
        return hat_flatten(pair, bundle, t + 1, img)

    n = worker_count()
    if n == 1 or dim_in < 2:
        cols = [column(i) for i in range(dim_in)]
    else:
        with ThreadPoolExecutor(max_workers=n) as pool:
            cols = list(pool.map(column, range(dim_in)))
    return [[cols[c][r] for c in range(dim_in)] for r in range(dim_out)]


# ---------------------------------------------------------------------------
# the cocycle

def atiyah_cocycle(pair, sc_ext):
    """Restrict the curvature components of an extension: block k of the
    cocycle is the one-quotient-slot part of the arity k+1 component. The
    result is keyed like total degree one block forms."""
    comps = ruth.curvature_components(sc_ext)
    out = {}
    for kk, a in comps.items():
        if kk == 0:
            continue
        r = restrict_form(pair, a)
        if not r.is_zero():
            out[(r.arity, r.vdeg)] = r
    return out


def apply_s(pair, sc_ext, alpha):
    out = {}
    for F in alpha.values():
        for key, G in s_apply(pair, sc_ext, F).items():
            out[key] = out[key].add(G) if key in out else G
    return {k: v for k, v in out.items() if not v.is_zero()}


@dataclass
class Exactness:
    exact: bool
    witness: object
    certificate: object
    degree: int


def solve_exactness(pair, sc_ext, alpha, t=1):
    """Decide alpha = s(phi) in total degree t.

    alpha must be closed (raises CocycleError otherwise). On success the
    witness is the deterministic minimal-support solution; on failure the
    certificate is a left kernel functional of the incoming differential
    with nonzero pairing against alpha.
    """
    bundle = sc_ext.bundle
    if not all(k + j == t for (k, j) in alpha):
        raise CocycleError("blocks of mixed total degree")
    res = apply_s(pair, sc_ext, alpha)
    if res:
        raise CocycleError("not a cocycle: s(alpha) has a nonzero block %r"
                           % sorted(res))
    S = s_matrix(pair, sc_ext, t - 1)
    v = hat_flatten(pair, bundle, t, alpha)
    x = linalg.solve(S, v)
    if x is not None:
        phi = hat_unflatten(pair, bundle, t - 1, x)
        back = apply_s(pair, sc_ext, phi)
        diff = hat_flatten(pair, bundle, t, back)
        assert diff == v, "witness does not reproduce the cocycle"
        return Exactness(True, phi, None, t)
    for y in linalg.left_kernel_basis(S):
        pairing = sum((a * b for a, b in zip(y, v) if a and b), F0)
        if pairing:
            return Exactness(False, None, (y, pairing), t)
    raise AssertionError("inconsistent system without a separating functional")


def cohomology_dim(pair, sc_ext, t):
    """dim of the hat cohomology in total degree t."""
    bundle = sc_ext.bundle
    dim_t = hat_dim(pair, bundle, t)
    S_in = s_matrix(pair, sc_ext, t - 1)
    S_out = s_matrix(pair, sc_ext, t)
    return dim_t - linalg.rank(S_out) - linalg.rank(S_in)


def difference_witness(pair, sc_ext_1, sc_ext_2):
    """Two extensions of one superconnection have cohomologous cocycles;
    solve for the primitive of the difference."""
    a1 = atiyah_cocycle(pair, sc_ext_1)
    a2 = atiyah_cocycle(pair, sc_ext_2)
    diff = dict(a1)
    for key, F in a2.items():
        diff[key] = diff[key].sub(F) if key in diff else F.scale_frac(F1 * -1)
    diff = {k: v for k, v in diff.items() if not v.is_zero()}
    return solve_exactness(pair, sc_ext_1, diff)


def compatible_extension(pair, sc_ext, phi):
    """Subtract the lifted witness from the extension data. The cross term
    [D, lift(phi)] restricts to s(phi) while the quadratic term needs two
    quotient indices per slot, so when s(phi) reproduces the cocycle the
    corrected extension has an identically zero cocycle, not just an exact
    one. phi empty returns the input."""
    if not all(k + j == 0 for (k, j) in phi):
        raise CocycleError("blocks of mixed total degree")
    alpha = atiyah_cocycle(pair, sc_ext)
    back = apply_s(pair, sc_ext, phi)
    for key in sorted(set(alpha) | set(back)):
        a, b = alpha.get(key), back.get(key)
        if a is None or b is None or not a.eq(b):
            raise CocycleError("s(phi) misses the cocycle at block %r" % (key,))
    lifts = {}
    for key in sorted(phi):
        lifted = lift_form(pair, phi[key])
        if not lifted.is_zero():
            lifts[lifted.arity] = lifted
    if not lifts:
        return sc_ext
    gammas = list(sc_ext.conn.gammas)
    if 1 in lifts:
        for (i,), e in lifts.pop(1).values.items():
            gammas[i] = gammas[i].sub(e)
    omegas = dict(sc_ext.omegas)
    for k, lifted in lifts.items():
        omegas[k] = omegas[k].sub(lifted) if k in omegas \
            else lifted.scale_frac(F1 * -1)
    omegas = {k: w for k, w in omegas.items() if not w.is_zero()}
    out = ruth.SuperConnection(pair.ambient, sc_ext.bundle,
                               Connection(sc_ext.bundle, pair.ambient.anchor,
                                          gammas),
                               sc_ext.partial, omegas)
    assert not atiyah_cocycle(pair, out), "correction left the cocycle alive"
    return out


def check_compatible(pair, sc_sub, sc_ext):
    """A flat extension makes the cocycle vanish identically; verify all
    three statements and return the cocycle for inspection."""
    if not is_extension(pair, sc_sub, sc_ext):
        raise CocycleError("not an extension of the given superconnection")
    bad = ruth.validate_flat(sc_ext)
    if bad is not None:
        raise CocycleError("extension is not flat at arity %d" % bad[1])
    return atiyah_cocycle(pair, sc_ext)


# ---------------------------------------------------------------------------
# literal component formulas (used to pin signs against the operator)

def s_zero_literal(pair, sc_sub, w):
    """Endo-raising component on a block of arity p and endo degree q:
    (-1)^(p+1) (partial o value - (-1)^q value o partial)."""
    p, q = w.arity, w.vdeg
    out = hat_template(pair, w.bundle, p, q + 1)
    pf = sc_sub.partial
    sgn = linalg.frac((-1) ** ((p + 1) % 2))
    inner = linalg.frac((-1) ** (q % 2))
    for I, vals in w.values.items():
        nv = []
        for e in vals:
            c = pf.compose(e).sub(e.compose(pf).scale_frac(inner))
            nv.append(c.scale_frac(sgn))
        if any(not e.is_zero() for e in nv):
            out.set(I, nv)
    return out


def s_one_literal(pair, sc_sub, w):
    """Arity-raising component, the covariant formula with the Bott twist:

      (s w)(a_0..a_p; l) = sum_t (-1)^t [nabla_(a_t), w(.. a_t ..; l)]
        + sum_(s<t) (-1)^(s+t) w([a_s, a_t], ..; l)
        - sum_t (-1)^t w(.. a_t ..; nabla^Bott_(a_t) l).
    """
    R = w.algebra
    p, q = w.arity, w.vdeg
    rA = pair.sub_rank
    qr = pair.quotient_rank
    bott = pair.bott_gammas()
    out = hat_template(pair, w.bundle, p + 1, q)
    for I in out.indices():
        vals = [EndElement(w.bundle, q) for _ in range(qr)]
        hit = False
        for t in range(p + 1):
            idx = I[t]
            rest = I[:t] + I[t + 1:]
            cur = w.values.get(rest)
            if cur is None:
                continue
            sgn = linalg.frac((-1) ** (t % 2))
            for m in range(qr):
                vals[m] = vals[m].add(sc_sub.conn.nabla_end(idx, cur[m]).scale_frac(sgn))
                for n in range(qr):
                    c = bott[idx][n][m]
                    if not R.is_zero(c):
                        vals[m] = vals[m].sub(cur[n].scale_alg(c).scale_frac(sgn))
            hit = True
        for s in range(p + 1):
            for t in range(s + 1, p + 1):
                rest = tuple(x for u, x in enumerate(I) if u not in (s, t))
                coeffs = pair.ambient.brackets[I[s]][I[t]]
                sgn = linalg.frac((-1) ** ((s + t) % 2))
                for u in range(rA):
                    c = coeffs[u]
                    if R.is_zero(c):
                        continue
                    tw = w.eval_at((u,) + rest)
                    for m in range(qr):
                        if not tw[m].is_zero():
                            vals[m] = vals[m].add(tw[m].scale_alg(c).scale_frac(sgn))
                            hit = True
        if hit and any(not e.is_zero() for e in vals):
            out.set(I, vals)
    return out
