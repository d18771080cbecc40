"""Representations up to homotopy: superconnections and flatness.

A superconnection on a graded bundle E over a base model A is
  D = partial + nabla + omega^(2) + omega^(3) + ...
with partial a degree +1 endomorphism, nabla a connection, and omega^(k)
an End_(1-k)-valued k-form, so every component has total degree 1. D acts
on E-valued forms; flatness D^2 = 0 decomposes by arity into
  a^(0) = partial^2
  a^(1) = d^nabla(partial)
  a^(2) = R_nabla + [partial, omega^(2)]
  a^(k) = d^nabla(omega^(k-1)) + sum_(s+t=k, s,t>=2) omega^(s) ^ omega^(t)
          + [partial, omega^(k)]        for k >= 3.
The identity D o D = sum_k a^(k) ^ - holds as operators whether or not the
components vanish; structure_check verifies it on a spanning set.
"""

import itertools

from . import graded, linalg
from .graded import Form, EndElement, wedge, commutator, cov_d
from .linalg import F1


class SuperConnection:
    def __init__(self, model, bundle, conn, partial, omegas=None):
        self.model = model
        self.bundle = bundle
        self.conn = conn
        self.partial = partial
        assert partial.degree == 1
        assert conn.directions == model.rank
        self.omegas = dict(omegas or {})
        for k, w in self.omegas.items():
            assert k >= 2 and w.arity == k and w.vkind == "end"
            assert w.vdeg == 1 - k, "omega^(%d) must have endo degree %d" % (k, 1 - k)

    @property
    def algebra(self):
        return self.bundle.algebra

    def omega(self, k):
        w = self.omegas.get(k)
        if w is None:
            w = Form(self.model.rank, k, "end", self.algebra, self.bundle, 1 - k)
        return w

    def partial_form(self):
        return graded.end_form_from_endo(self.model.rank, self.partial)


def curvature(model, conn):
    """Curvature two-form of a connection, assembled column by column from
    nabla_i nabla_j - nabla_j nabla_i - nabla_[e_i, e_j]."""
    R = model.algebra
    bundle = conn.bundle
    out = Form(model.rank, 2, "end", R, bundle, 0)
    basis = graded.vec_basis(bundle)
    for i in range(model.rank):
        for j in range(i + 1, model.rank):
            e = EndElement(bundle, 0)
            cij = model.brackets[i][j]
            cols = {}
            for (lev, b) in basis:
                v = [R.zero()] * bundle.rank(lev)
                v[b] = R.one()
                w = conn.nabla_vec(i, lev, conn.nabla_vec(j, lev, v))
                w2 = conn.nabla_vec(j, lev, conn.nabla_vec(i, lev, v))
                w = [R.sub(a, c) for a, c in zip(w, w2)]
                for k, ck in enumerate(cij):
                    if R.is_zero(ck):
                        continue
                    nk = conn.nabla_vec(k, lev, v)
                    w = [R.sub(a, R.mul(ck, c)) for a, c in zip(w, nk)]
                cols.setdefault(lev, []).append(w)
            for lev, cs in cols.items():
                M = [[cs[c][r] for c in range(len(cs))] for r in range(bundle.rank(lev))]
                if not graded.ris_zero(R, M):
                    e.set_block(lev, M)
            if not e.is_zero():
                out.set((i, j), e)
    return out


def curvature_components(sc):
    """The forms a^(k), k = 0 .. base rank, as a dict."""
    model, conn = sc.model, sc.conn
    comps = {}
    sq = sc.partial.compose(sc.partial)
    a0 = Form(model.rank, 0, "end", sc.algebra, sc.bundle, 2)
    if not sq.is_zero():
        a0.set((), sq)
    comps[0] = a0
    pform = sc.partial_form()
    comps[1] = cov_d(model, conn, pform)
    for k in range(2, model.rank + 1):
        if k == 2:
            ak = curvature(model, conn)
        else:
            ak = cov_d(model, conn, sc.omega(k - 1))
            for s in range(2, k - 1):
                t = k - s
                ak = ak.add(wedge(sc.omega(s), sc.omega(t)))
        ak = ak.add(commutator(pform, sc.omega(k)))
        comps[k] = ak
    return comps


def validate_flat(sc):
    """None when D^2 = 0; otherwise ('flatness', arity, residual form)."""
    for k, ak in sorted(curvature_components(sc).items()):
        if not ak.is_zero():
            return ("flatness", k, ak)
    return None


# ---------------------------------------------------------------------------
# the operator

def apply_D_form(sc, F):
    """Apply the superconnection to one homogeneous E-valued form; the
    result is a dict (arity, level) -> Form."""
    out = {}

    def put(G):
        if G.is_zero():
            return
        key = (G.arity, G.vdeg)
        out[key] = out[key].add(G) if key in out else G

    put(wedge(sc.partial_form(), F))
    put(cov_d(sc.model, sc.conn, F))
    for k in sorted(sc.omegas):
        put(wedge(sc.omegas[k], F))
    return out


def apply_D(sc, elem):
    out = {}
    for F in elem.values():
        for key, G in apply_D_form(sc, F).items():
            out[key] = out[key].add(G) if key in out else G
    return {k: v for k, v in out.items() if not v.is_zero()}


def om_sub(a, b):
    out = dict(a)
    for key, G in b.items():
        out[key] = out[key].sub(G) if key in out else G.scale_frac(F1 * -1)
    return {k: v for k, v in out.items() if not v.is_zero()}


def om_is_zero(elem):
    return all(F.is_zero() for F in elem.values())


def vec_basis_forms(sc):
    """Spanning set of E-valued forms: every multi-index, bundle slot and
    coefficient basis element."""
    R = sc.algebra
    forms = []
    for k in range(sc.model.rank + 1):
        for lev in sc.bundle.degrees():
            for b in range(sc.bundle.rank(lev)):
                for m in range(R.dim):
                    coeff = tuple(F1 if t == m else linalg.F0 for t in range(R.dim))
                    for I in itertools.combinations(range(sc.model.rank), k):
                        F = Form(sc.model.rank, k, "vec", R, sc.bundle, lev)
                        v = [R.zero()] * sc.bundle.rank(lev)
                        v[b] = coeff
                        F.set(I, v)
                        forms.append(F)
    return forms


def structure_check(sc, comps=None):
    """Verify D o D = sum_k a^(k) ^ - on the spanning set.

    Returns None or ('operator_mismatch', (arity, level)) for the first
    basis form where the two sides differ.
    """
    if comps is None:
        comps = curvature_components(sc)
    for F in vec_basis_forms(sc):
        dd = apply_D(sc, apply_D_form(sc, F))
        rhs = {}
        for k, ak in comps.items():
            G = wedge(ak, F)
            if G.is_zero():
                continue
            key = (G.arity, G.vdeg)
            rhs[key] = rhs[key].add(G) if key in rhs else G
        if not om_is_zero(om_sub(dd, rhs)):
            return ("operator_mismatch", (F.arity, F.vdeg))
    return None


# ---------------------------------------------------------------------------
# gauge transport

def rinv(R, M):
    """Inverse of a square matrix over the algebra, or None. The matrix is
    inverted as a Q-linear operator on coordinate vectors, which succeeds
    exactly when it is invertible over the algebra."""
    n = len(M)
    if n == 0:
        return []
    big = linalg.zeros(n * R.dim, n * R.dim)
    for i in range(n):
        for j in range(n):
            op = R.mult_op(M[i][j])
            for r in range(R.dim):
                for c in range(R.dim):
                    big[i * R.dim + r][j * R.dim + c] = op[r][c]
    inv = linalg.inverse(big)
    if inv is None:
        return None
    out = graded.rzeros(R, n, n)
    for j in range(n):
        col = [linalg.F0] * (n * R.dim)
        col[j * R.dim + R.unit_index] = F1
        img = linalg.matvec(inv, col)
        for i in range(n):
            out[i][j] = tuple(img[i * R.dim:(i + 1) * R.dim])
    return out


class TransportError(Exception):
    pass


def invert_phi(phis):
    """Pointwise inverse of a degree 0 form family phis[k], k >= 0, with
    phis[0] an arity-0 invertible endomorphism."""
    phi0 = phis[0]
    assert phi0.arity == 0 and phi0.vdeg == 0
    bundle = phi0.bundle
    R = bundle.algebra
    e0 = phi0.get(())
    inv0 = EndElement(bundle, 0)
    for lev in bundle.degrees():
        M = rinv(R, e0.block(lev))
        if M is None:
            raise TransportError("transport is not invertible at level %d" % lev)
        inv0.set_block(lev, M)
    psi0 = graded.end_form_from_endo(phi0.base_rank, inv0)
    psis = {0: psi0}
    # the inverse can carry arity the input lacks: (1 + p)^(-1) needs every
    # power of p that fits on the base
    top = phi0.base_rank
    for k in range(1, top + 1):
        acc = None
        for a in range(1, k + 1):
            if a not in phis or (k - a) not in psis:
                continue
            term = wedge(phis[a], psis[k - a])
            acc = term if acc is None else acc.add(term)
        if acc is None:
            continue
        cand = wedge(psi0, acc).scale_frac(F1 * -1)
        if not cand.is_zero():
            psis[k] = cand
    return psis


def _mixed_wedge(family, elem):
    out = {}
    for F in elem.values():
        for phi in family.values():
            G = wedge(phi, F)
            if G.is_zero():
                continue
            key = (G.arity, G.vdeg)
            out[key] = out[key].add(G) if key in out else G
    return {k: v for k, v in out.items() if not v.is_zero()}


def transport(sc, phis):
    """Conjugated superconnection phi o D o phi^(-1), rebuilt in components
    and certified against the conjugated operator on a spanning set."""
    psis = invert_phi(phis)
    R = sc.algebra
    bundle = sc.bundle
    rk = sc.model.rank

    def conj(F):
        elem = {(F.arity, F.vdeg): F}
        return _mixed_wedge(phis, apply_D(sc, _mixed_wedge(psis, elem)))

    partial = EndElement(bundle, 1)
    gammas = [EndElement(bundle, 0) for _ in range(rk)]
    new_omegas = {k: Form(rk, k, "end", R, bundle, 1 - k) for k in range(2, rk + 1)}
    for lev in bundle.degrees():
        for b in range(bundle.rank(lev)):
            F = Form(rk, 0, "vec", R, bundle, lev)
            v = [R.zero()] * bundle.rank(lev)
            v[b] = R.one()
            F.set((), v)
            img = conj(F)
            for (k, tgt), G in img.items():
                if tgt != lev + 1 - k:
                    raise TransportError("transport broke the total degree")
                if k == 0:
                    col = G.get(())
                    M = [row[:] for row in partial.block(lev)]
                    for r in range(bundle.rank(tgt)):
                        M[r][b] = col[r]
                    partial.set_block(lev, M)
                elif k == 1:
                    for (i,) in G.indices():
                        col = G.values.get((i,))
                        if col is None:
                            continue
                        M = [row[:] for row in gammas[i].block(lev)]
                        for r in range(bundle.rank(tgt)):
                            M[r][b] = col[r]
                        gammas[i].set_block(lev, M)
                else:
                    for I in G.indices():
                        col = G.values.get(I)
                        if col is None:
                            continue
                        e = new_omegas[k].get(I)
                        M = [row[:] for row in e.block(lev)]
                        for r in range(bundle.rank(tgt)):
                            M[r][b] = col[r]
                        e.set_block(lev, M)
                        new_omegas[k].set(I, e)
    out = SuperConnection(sc.model, bundle, graded.Connection(bundle, sc.conn.anchor_mats, gammas),
                          partial, {k: w for k, w in new_omegas.items() if not w.is_zero()})
    for F in vec_basis_forms(sc):
        lhs = apply_D_form(out, F)
        rhs = conj(F)
        if not om_is_zero(om_sub(lhs, rhs)):
            raise TransportError("transported components do not rebuild the operator")
    return out
