"""Contractions of resolutions and transfer to the resolved module.

A bundle concentrated in degrees <= 0 with differential partial resolves
K = coker(partial) when homology vanishes below degree zero and every
image splits off freely; both facts are certified here with unit pivot
echelons and exact solves, and violations are refused with the offending
degree. The output contraction (sigma, phi, theta) satisfies the side
conditions on the nose and they are rechecked at runtime rather than
assumed.
"""

from dataclasses import dataclass

from . import atiyah, graded, linalg, rmodule, ruth
from .graded import Connection, EndElement, Form, GradedBundle
from .linalg import F0, F1


class ResolutionError(Exception):
    def __init__(self, message, degree):
        self.degree = degree
        super().__init__("%s (degree %d)" % (message, degree))


@dataclass
class Contraction:
    bundle: GradedBundle
    partial: EndElement
    k_rank: int
    sigma: list
    phi: list
    theta: EndElement

    @property
    def algebra(self):
        return self.bundle.algebra

    def k_bundle(self):
        return GradedBundle(self.algebra, {0: self.k_rank} if self.k_rank else {})

    def sigma_phi_end(self):
        """sigma o phi as a degree zero endomorphism of the bundle."""
        R = self.algebra
        e = EndElement(self.bundle, 0)
        M = graded.rmul(R, self.sigma, self.phi)
        if not graded.ris_zero(R, M):
            e.set_block(0, M)
        return e

    def project(self, e):
        """phi o (level zero block) o sigma of a degree zero endomorphism."""
        R = self.algebra
        return graded.rmul(R, self.phi, graded.rmul(R, e.block(0), self.sigma))

    def validate(self):
        """Check the side conditions; None or (identity, degree)."""
        R = self.algebra
        if not self.partial.compose(self.partial).is_zero():
            return ("partial_squared", 0)
        lhs = self.partial.compose(self.theta).add(self.theta.compose(self.partial))
        rhs = EndElement.identity(self.bundle).sub(self.sigma_phi_end())
        d = lhs.sub(rhs)
        for lev in self.bundle.degrees():
            if not graded.ris_zero(R, d.block(lev)):
                return ("contraction", lev)
        t2 = self.theta.compose(self.theta)
        for lev in self.bundle.degrees():
            if not graded.ris_zero(R, t2.block(lev)):
                return ("theta_squared", lev)
        if self.k_rank:
            ts = graded.rmul(R, self.theta.block(0), self.sigma)
            if not graded.ris_zero(R, ts):
                return ("theta_sigma", 0)
            ps = graded.rmul(R, self.phi, self.sigma)
            if not graded.req(R, ps, graded.rid(R, self.k_rank)):
                return ("phi_sigma", 0)
        return None


def build_contraction(bundle, partial):
    """Split a nonpositively graded complex over its degree zero homology.

    Refuses positive degrees, nonvanishing homology below zero, and images
    that do not split off with unit pivots.
    """
    R = bundle.algebra
    levels = sorted(bundle.degrees())
    if levels and levels[-1] > 0:
        raise ResolutionError("positive degrees present", levels[-1])
    if not partial.compose(partial).is_zero():
        raise ResolutionError("differential does not square to zero", 0)

    theta = EndElement(bundle, -1)
    b_cols, b_pivots = [], []
    sigma = phi = None
    k_rank = 0
    for lev in levels:
        n = bundle.rank(lev)
        Q = [r for r in range(n) if r not in b_pivots]
        if lev < 0:
            rows = bundle.rank(lev + 1)
            D = partial.block(lev)
            DW = [[D[r][c] for c in Q] for r in range(rows)]
            for g in rmodule.rkernel_generators(R, DW, rows, len(Q)):
                if any(not R.is_zero(x) for x in g):
                    raise ResolutionError("nonzero homology", lev)
            w_cols = [[DW[r][c] for r in range(rows)] for c in range(len(Q))]
            try:
                nb_cols, nb_pivots = rmodule.unit_pivot_echelon(R, w_cols, rows)
            except rmodule.EchelonFailure:
                raise ResolutionError("image does not split with unit pivots",
                                      lev + 1)
            tb = graded.rzeros(R, n, rows)
            for k, (bcol, p) in enumerate(zip(nb_cols, nb_pivots)):
                x = rmodule.rsolve(R, DW, bcol, rows, len(Q))
                assert x is not None, "preimage of an image basis vector"
                for u, r in enumerate(Q):
                    tb[r][p] = x[u]
            if rows and not graded.ris_zero(R, tb):
                theta.set_block(lev + 1, tb)
            b_cols, b_pivots = nb_cols, nb_pivots
        else:
            k_rank = len(Q)
            sigma = graded.rzeros(R, n, k_rank)
            phi = graded.rzeros(R, k_rank, n)
            for u, r in enumerate(Q):
                sigma[r][u] = R.one()
                phi[u][r] = R.one()
            for k, (bcol, p) in enumerate(zip(b_cols, b_pivots)):
                for u, r in enumerate(Q):
                    phi[u][p] = R.neg(bcol[r])
    contr = Contraction(bundle=bundle, partial=partial, k_rank=k_rank,
                        sigma=sigma, phi=phi, theta=theta)
    bad = contr.validate()
    assert bad is None, "side condition %s failed at degree %d" % bad
    return contr


# ---------------------------------------------------------------------------
# quotient connection

def quotient_connection(sc, contr):
    """Connection phi o nabla o sigma on the resolved module, certified
    well defined (phi nabla partial = 0) and flat."""
    R = sc.algebra
    bundle = sc.bundle
    k = contr.k_rank
    K0 = contr.k_bundle()
    gammas = []
    for i in range(sc.model.rank):
        cols = []
        for u in range(k):
            v = [contr.sigma[r][u] for r in range(bundle.rank(0))]
            w = sc.conn.nabla_vec(i, 0, v)
            cols.append(graded.rmatvec(R, contr.phi, w))
        M = [[cols[u][r] for u in range(k)] for r in range(k)]
        if -1 in bundle.degrees():
            P = contr.partial.block(-1)
            for u in range(bundle.rank(-1)):
                v = [P[r][u] for r in range(bundle.rank(0))]
                w = graded.rmatvec(R, contr.phi, sc.conn.nabla_vec(i, 0, v))
                if any(not R.is_zero(x) for x in w):
                    raise ResolutionError("connection does not descend", 0)
        g = EndElement(K0, 0)
        if k and not graded.ris_zero(R, M):
            g.set_block(0, M)
        gammas.append(g)
    connK = Connection(K0, sc.conn.anchor_mats, gammas)
    RK = ruth.curvature(sc.model, connK)
    if not RK.is_zero():
        raise ResolutionError("quotient connection is not flat", 0)
    return connK


def quotient_ruth(sc, contr):
    """The resolved module as a one-level representation (flat module)."""
    K0 = contr.k_bundle()
    return ruth.SuperConnection(sc.model, K0, quotient_connection(sc, contr),
                                EndElement(K0, 1), {})


# ---------------------------------------------------------------------------
# endomorphism cohomology of (E, partial)

def ad_partial_matrix(contr, j):
    """Rational matrix of [partial, -]: End_j -> End_(j+1)."""
    bundle = contr.bundle
    pf = contr.partial
    din = graded.end_dim(bundle, j)
    cols = []
    for idx in range(din):
        coords = [F0] * din
        coords[idx] = F1
        e = graded.end_unflatten(bundle, j, coords)
        br = pf.commutator(e)
        cols.append(graded.end_flatten(br))
    dout = graded.end_dim(bundle, j + 1)
    return [[cols[c][r] for c in range(din)] for r in range(dout)]


def end_cohomology_dims(contr):
    """dim_Q H^j(End(E), [partial, -]) for every degree j."""
    bundle = contr.bundle
    degs = bundle.end_degrees()
    mats = {j: ad_partial_matrix(contr, j) for j in degs}
    out = {}
    for j in degs:
        dim_j = graded.end_dim(bundle, j)
        r_out = linalg.rank(mats[j])
        r_in = linalg.rank(mats[j - 1]) if (j - 1) in mats else 0
        out[j] = dim_j - r_out - r_in
    return out


def explicit_homotopy(contr, f):
    """For closed f of degree j != 0 return g with [partial, g] = f; the
    primitive is theta-multiplication, checked before returning."""
    j = f.degree
    assert j != 0
    assert contr.partial.commutator(f).is_zero(), "f is not closed"
    if j >= 1:
        g = f.compose(contr.theta)
        if j % 2:
            g = g.scale_frac(F1 * -1)
    else:
        g = contr.theta.compose(f)
    br = contr.partial.commutator(g)
    assert br.eq(f), "homotopy identity failed in degree %d" % j
    return g


# ---------------------------------------------------------------------------
# the classical cocycle on the resolved module

def classical_atiyah(pair, sc_ext, contr):
    """phi o R(a, q) o sigma: the curvature of the extension paired with one
    sub and one quotient direction, pushed to the resolved module."""
    R = sc_ext.algebra
    rA, q = pair.sub_rank, pair.quotient_rank
    K0 = contr.k_bundle()
    curv = ruth.curvature(pair.ambient, sc_ext.conn)
    out = Form(rA, 1, "quot", R, K0, 0, q)
    for i in range(rA):
        vals = []
        for m in range(q):
            M = contr.project(curv.eval_at((i, rA + m)))
            e = EndElement(K0, 0)
            if contr.k_rank and not graded.ris_zero(R, M):
                e.set_block(0, M)
            vals.append(e)
        if any(not e.is_zero() for e in vals):
            out.set((i,), vals)
    return out


def project_hat_form(contr, w):
    """Apply phi - sigma to the values of a degree zero quotient-slot form
    on the resolution, landing on the resolved module."""
    assert w.vkind == "quot" and w.vdeg == 0
    R = contr.algebra
    K0 = contr.k_bundle()
    out = Form(w.base_rank, w.arity, "quot", R, K0, 0, w.qrank)
    for I, vals in w.values.items():
        nv = []
        for e in vals:
            M = contr.project(e)
            ne = EndElement(K0, 0)
            if contr.k_rank and not graded.ris_zero(R, M):
                ne.set_block(0, M)
            nv.append(ne)
        if any(not e.is_zero() for e in nv):
            out.set(I, nv)
    return out


@dataclass
class BrstComparison:
    dims_resolution: dict
    dims_module: dict
    chain_level_equal: bool
    equal: bool


def compare_brst(pair, sc_sub, sc_ext, contr=None):
    """Cohomology of the cocycle receptacle over the resolution against the
    receptacle over the resolved flat module, plus the chain level match of
    the projected cocycle block with the classical one."""
    if contr is None:
        contr = build_contraction(sc_sub.bundle, sc_sub.partial)
    scK = quotient_ruth(sc_sub, contr)
    extK = atiyah.extend(pair, scK)
    ts = set()
    bundle = sc_sub.bundle
    for t in range(min(bundle.end_degrees() or [0]),
                   pair.sub_rank + max(bundle.end_degrees() or [0]) + 1):
        ts.add(t)
    for t in range(0, pair.sub_rank + 1):
        ts.add(t)
    dims_e = {}
    dims_k = {}
    for t in sorted(ts):
        dims_e[t] = atiyah.cohomology_dim(pair, sc_ext, t)
        dims_k[t] = atiyah.cohomology_dim(pair, extK, t)
    alpha = atiyah.atiyah_cocycle(pair, sc_ext)
    a1 = alpha.get((1, 0))
    if a1 is None:
        a1 = atiyah.hat_template(pair, bundle, 1, 0)
    projected = project_hat_form(contr, a1)
    at_k = classical_atiyah(pair, sc_ext, contr)
    chain = projected.eq(at_k)
    return BrstComparison(dims_resolution=dims_e, dims_module=dims_k,
                          chain_level_equal=chain,
                          equal=chain and dims_e == dims_k)
