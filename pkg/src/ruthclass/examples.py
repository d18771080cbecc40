"""Worked models, builders, and seeded random instances.

Three constructions produce representations up to homotopy together with
the data the cocycle machinery consumes:

  build_double   the double K[1] (+) K of a module with connection,
  build_normal   A[1] (+) L with the basic connections of a pair,
  build_adjoint  g(A)[2] (+) A[1] (+) T over a jet algebra, where T is the
                 log frame algebroid and g(A) the kernel of the factored
                 anchor.

Builders refuse inputs they cannot certify instead of guessing: the
adjoint needs the anchor to factor through the log frame with a free
kernel, and every built superconnection is checked flat before it is
returned.
"""

import random
from dataclasses import dataclass
from fractions import Fraction

from . import graded, linalg, rmodule, ruth
from .graded import Connection, EndElement, Form, GradedBundle
from .liemodel import LieAlgebroidModel, LiePair
from .linalg import F0, F1
from .ruth import SuperConnection
from .scalars import CoeffAlgebra


class BuildError(Exception):
    pass


# ---------------------------------------------------------------------------
# model zoo

def abelian_pair(algebra, rank, sub_rank):
    return LiePair(LieAlgebroidModel.abelian(algebra, rank), sub_rank)


def sl2_borel():
    """sl(2) as a point algebroid with its Borel subalgebra.

    Basis (h, e, f) with [h,e] = 2e, [h,f] = -2f, [e,f] = h; the pair keeps
    the span of h and e.
    """
    R = CoeffAlgebra.point()

    def q(n):
        return R.from_rational(n)

    z = R.zero()
    br = [[[z] * 3 for _ in range(3)] for _ in range(3)]
    br[0][1] = [z, q(2), z]
    br[1][0] = [z, q(-2), z]
    br[0][2] = [z, z, q(-2)]
    br[2][0] = [z, z, q(2)]
    br[1][2] = [q(1), z, z]
    br[2][1] = [q(-1), z, z]
    model = LieAlgebroidModel(R, 3, br, [linalg.zeros(1, 1) for _ in range(3)])
    return LiePair(model, 2)


def heisenberg_pair():
    """Heisenberg algebra, basis (x, z, y) with [x, y] = z, keeping (x, z)."""
    R = CoeffAlgebra.point()
    z = R.zero()
    br = [[[z] * 3 for _ in range(3)] for _ in range(3)]
    br[0][2] = [z, R.one(), z]
    br[2][0] = [z, R.neg(R.one()), z]
    model = LieAlgebroidModel(R, 3, br, [linalg.zeros(1, 1) for _ in range(3)])
    return LiePair(model, 2)


def log_frame_model(R):
    """The log frame algebroid of a jet algebra: basis tau_i with anchor
    x_i d/dx_i and vanishing frame brackets."""
    assert R.kind == "jet"
    n, _ = R.jet_params
    z = R.zero()
    br = [[[z] * n for _ in range(n)] for _ in range(n)]
    anchors = []
    for i in range(n):
        D = linalg.zeros(R.dim, R.dim)
        for j, e in enumerate(R.monomials):
            D[j][j] = Fraction(e[i])
        anchors.append(D)
    return LieAlgebroidModel(R, n, br, anchors)


def jet_scaling_pair(order=2):
    """Rank two algebroid over Q[x]/(x^(order+1)): tau with anchor x d/dx
    and sigma with zero anchor, [tau, sigma] = sigma; the pair keeps tau."""
    R = CoeffAlgebra.jet(1, order)
    T = log_frame_model(R)
    z = R.zero()
    br = [[[z, z], [z, R.one()]], [[z, R.neg(R.one())], [z, z]]]
    model = LieAlgebroidModel(R, 2, br, [T.anchor[0], linalg.zeros(R.dim, R.dim)])
    return LiePair(model, 1)


def jet_log_model(order=2):
    """Rank one: the log frame itself as an anchored algebroid."""
    return log_frame_model(CoeffAlgebra.jet(1, order))


def jet_squared_model(order=2):
    """Rank one with anchor x^2 d/dx: factors through the log frame as
    x tau, so its adjoint kernel is not free."""
    R = CoeffAlgebra.jet(1, order)
    x = [F0] * R.dim
    x[R.mono_index[(1,)]] = F1
    D = linalg.mul(R.mult_op(tuple(x)), log_frame_model(R).anchor[0])
    return LieAlgebroidModel(R, 1, [[[R.zero()]]], [D])


def zoo_pairs():
    return {
        "abelian": abelian_pair(CoeffAlgebra.point(), 3, 1),
        "borel": sl2_borel(),
        "heisenberg": heisenberg_pair(),
        "jet_scaling": jet_scaling_pair(),
    }


# ---------------------------------------------------------------------------
# seeded randomness (test determinism relies on these only using rng)

def random_rational(rng, span=2):
    return Fraction(rng.randint(-span, span), rng.choice((1, 2)))


def random_alg_elem(R, rng, span=2):
    return tuple(random_rational(rng, span) for _ in range(R.dim))


def random_rmat(R, rng, m, n, span=1):
    return [[random_alg_elem(R, rng, span) for _ in range(n)] for _ in range(m)]


def random_l_connection(pair, rng=None):
    """Seed tensor S[m][c][i]: nabla_{e_m}(e_i) = sum_c S[m][c][i] e_c."""
    R = pair.algebra
    rA, rL = pair.sub_rank, pair.ambient.rank
    if rng is None:
        z = R.zero()
        return [[[z] * rA for _ in range(rA)] for _ in range(rL)]
    return [random_rmat(R, rng, rA, rA) for _ in range(rL)]


# ---------------------------------------------------------------------------
# section calculus helpers over a pair

def _basis(R, n, i):
    v = [R.zero()] * n
    v[i] = R.one()
    return v


def _pad(pair, a):
    return list(a) + [pair.algebra.zero()] * pair.quotient_rank


def _cut(pair, l):
    R = pair.algebra
    rA = pair.sub_rank
    for c in l[rA:]:
        if not R.is_zero(c):
            raise BuildError("section left the subalgebroid")
    return list(l[:rA])


def _nabla_seed(pair, seed, X, a):
    """nabla_X(a) for the seeded L-connection on A; X in L, a in A."""
    R = pair.algebra
    rA = pair.sub_rank
    out = [R.zero()] * rA
    for m, xm in enumerate(X):
        if R.is_zero(xm):
            continue
        term = [R.zero()] * rA
        Dm = pair.ambient.anchor[m]
        for c in range(rA):
            term[c] = tuple(linalg.matvec(Dm, list(a[c])))
            for i in range(rA):
                if not R.is_zero(a[i]):
                    term[c] = R.add(term[c], R.mul(seed[m][c][i], a[i]))
        for c in range(rA):
            out[c] = R.add(out[c], R.mul(xm, term[c]))
    return out


# ---------------------------------------------------------------------------
# the double

def build_double(pair, k_rank, k_gammas=None, ext_gammas=None, rng=None):
    """Double of a module with connection, with a flat ambient extension.

    k_gammas are the sub-direction connection matrices on the rank k_rank
    module, ext_gammas the quotient-direction extension seed; omitted
    blocks are zero unless an rng is given. Returns (sc_sub, sc_ext), both
    flat by construction.
    """
    R = pair.algebra
    rA, rL = pair.sub_rank, pair.ambient.rank
    if k_gammas is None:
        k_gammas = [random_rmat(R, rng, k_rank, k_rank) if rng else
                    graded.rzeros(R, k_rank, k_rank) for _ in range(rA)]
    if ext_gammas is None:
        ext_gammas = [random_rmat(R, rng, k_rank, k_rank) if rng else
                      graded.rzeros(R, k_rank, k_rank) for _ in range(rL - rA)]
    full = list(k_gammas) + list(ext_gammas)

    K0 = GradedBundle(R, {0: k_rank})
    connK = Connection(K0, pair.ambient.anchor,
                       [EndElement(K0, 0, {0: g} if not graded.ris_zero(R, g) else None)
                        for g in full])
    RL = ruth.curvature(pair.ambient, connK)

    bundle = GradedBundle(R, {-1: k_rank, 0: k_rank})
    partial = EndElement(bundle, 1, {-1: graded.rid(R, k_rank)})

    def lift_conn(dirs):
        gs = []
        for i in dirs:
            g = full[i]
            blocks = {} if graded.ris_zero(R, g) else {-1: g, 0: g}
            gs.append(EndElement(bundle, 0, blocks or None))
        return gs

    def omega_two(base_rank, idx_pairs):
        w = Form(base_rank, 2, "end", R, bundle, -1)
        for (i, j) in idx_pairs:
            M = RL.get((i, j)).blocks.get(0)
            if M is None:
                continue
            w.set((i, j), EndElement(bundle, -1, {0: graded.rneg(R, M)}))
        return w

    sub = pair.sub_model()
    scA = SuperConnection(sub, bundle,
                          Connection(bundle, sub.anchor, lift_conn(range(rA))),
                          partial,
                          {2: omega_two(rA, [(i, j) for i in range(rA)
                                             for j in range(i + 1, rA)])})
    scL = SuperConnection(pair.ambient, bundle,
                          Connection(bundle, pair.ambient.anchor, lift_conn(range(rL))),
                          partial,
                          {2: omega_two(rL, [(i, j) for i in range(rL)
                                             for j in range(i + 1, rL)])})
    for sc in (scA, scL):
        bad = ruth.validate_flat(sc)
        if bad is not None:
            raise BuildError("double is not flat at arity %d" % bad[1])
    return scA, scL


# ---------------------------------------------------------------------------
# the normal complex

def basic_curvature(pair, seed, i, j):
    """The basic curvature matrix at sub directions (i, j), columns over the
    ambient basis:

      R(a,b)(l) = nabla_l([a,b]) - [nabla_l a, b] - [a, nabla_l b]
                  + nabla_(nablabas_a l)(b) - nabla_(nablabas_b l)(a).
    """
    R = pair.algebra
    rA, rL = pair.sub_rank, pair.ambient.rank
    amb = pair.ambient
    ei, ej = _basis(R, rL, i), _basis(R, rL, j)
    br_ij = _cut(pair, amb.bracket(ei, ej))
    cols = []
    for m in range(rL):
        lm = _basis(R, rL, m)
        v = _nabla_seed(pair, seed, lm, br_ij)
        na = _nabla_seed(pair, seed, lm, _cut(pair, ei))
        nb = _nabla_seed(pair, seed, lm, _cut(pair, ej))
        v = [R.sub(a, b) for a, b in zip(v, _cut(pair, amb.bracket(_pad(pair, na), ej)))]
        v = [R.sub(a, b) for a, b in zip(v, _cut(pair, amb.bracket(ei, _pad(pair, nb))))]
        bas_i = [R.add(p, q) for p, q in zip(
            _pad(pair, _nabla_seed(pair, seed, lm, _cut(pair, ei))), amb.bracket(ei, lm))]
        bas_j = [R.add(p, q) for p, q in zip(
            _pad(pair, _nabla_seed(pair, seed, lm, _cut(pair, ej))), amb.bracket(ej, lm))]
        v = [R.add(a, b) for a, b in zip(v, _nabla_seed(pair, seed, bas_i, _cut(pair, ej)))]
        v = [R.sub(a, b) for a, b in zip(v, _nabla_seed(pair, seed, bas_j, _cut(pair, ei)))]
        cols.append(v)
    return [[cols[m][c] for m in range(rL)] for c in range(rA)]


def build_normal(pair, seed=None):
    """The normal complex A[1] (+) L of a pair, from a seeded L-connection
    on A. Returns (sc_sub, sc_ext); the extension keeps the connection
    blocks zero in quotient directions and extends the curvature form by
    zero, so it is generally not flat."""
    R = pair.algebra
    rA, rL = pair.sub_rank, pair.ambient.rank
    amb = pair.ambient
    if seed is None:
        seed = random_l_connection(pair)
    bundle = GradedBundle(R, {-1: rA, 0: rL})
    iota = [[R.one() if (r == c and r < rA) else R.zero() for c in range(rA)]
            for r in range(rL)]
    partial = EndElement(bundle, 1, {-1: iota})

    gammas = []
    for i in range(rA):
        ei = _basis(R, rL, i)
        low = graded.rzeros(R, rA, rA)
        top = graded.rzeros(R, rL, rL)
        for b in range(rA):
            col = _nabla_seed(pair, seed, _basis(R, rL, b), _cut(pair, ei))
            br = _cut(pair, amb.bracket(ei, _basis(R, rL, b)))
            for c in range(rA):
                low[c][b] = R.add(col[c], br[c])
        for m in range(rL):
            lm = _basis(R, rL, m)
            col = _pad(pair, _nabla_seed(pair, seed, lm, _cut(pair, ei)))
            br = amb.bracket(ei, lm)
            for c in range(rL):
                top[c][m] = R.add(col[c], br[c])
        blocks = {}
        if not graded.ris_zero(R, low):
            blocks[-1] = low
        if not graded.ris_zero(R, top):
            blocks[0] = top
        gammas.append(EndElement(bundle, 0, blocks or None))

    omega = Form(rA, 2, "end", R, bundle, -1)
    for i in range(rA):
        for j in range(i + 1, rA):
            M = basic_curvature(pair, seed, i, j)
            if not graded.ris_zero(R, M):
                omega.set((i, j), EndElement(bundle, -1, {0: M}))

    sub = pair.sub_model()
    scA = SuperConnection(sub, bundle, Connection(bundle, sub.anchor, gammas),
                          partial, {2: omega} if not omega.is_zero() else {})
    bad = ruth.validate_flat(scA)
    if bad is not None:
        raise BuildError("normal complex is not flat at arity %d" % bad[1])

    ext_gammas = list(gammas) + [EndElement(bundle, 0) for _ in range(rL - rA)]
    ext_omega = Form(rL, 2, "end", R, bundle, -1)
    for I, v in omega.values.items():
        ext_omega.set(I, v)
    scL = SuperConnection(amb, bundle, Connection(bundle, amb.anchor, ext_gammas),
                          partial, {2: ext_omega} if not ext_omega.is_zero() else {})
    return scA, scL


# ---------------------------------------------------------------------------
# the adjoint over a jet algebra

@dataclass
class AdjointData:
    sc: SuperConnection
    rho: list
    g_basis: list
    g_rank: int
    t_model: LieAlgebroidModel
    nu_rank: object


def _factor_anchor(model, T):
    """Solve anchor_i = sum_j rho[j][i] anchor_T(tau_j) for R-coefficients."""
    R = model.algebra
    n = T.rank
    cols = []
    for j in range(n):
        for m in range(R.dim):
            f = tuple(F1 if t == m else F0 for t in range(R.dim))
            D = linalg.mul(R.mult_op(f), T.anchor[j])
            cols.append([D[r][c] for r in range(R.dim) for c in range(R.dim)])
    A = [[cols[k][t] for k in range(len(cols))] for t in range(R.dim * R.dim)]
    rho = graded.rzeros(R, n, model.rank)
    for i in range(model.rank):
        b = [model.anchor[i][r][c] for r in range(R.dim) for c in range(R.dim)]
        sol = linalg.solve(A, b)
        if sol is None:
            raise BuildError("anchor of direction %d does not factor through "
                             "the log frame" % i)
        for j in range(n):
            rho[j][i] = tuple(sol[j * R.dim:(j + 1) * R.dim])
    return rho


def _rho_apply(R, rho, a):
    return [_sum_mul(R, row, a) for row in rho]


def _sum_mul(R, row, a):
    acc = R.zero()
    for c, x in zip(row, a):
        if not (R.is_zero(c) or R.is_zero(x)):
            acc = R.add(acc, R.mul(c, x))
    return acc


def _nabla_t_seed(model, T, seed, X, a):
    """Seeded T-connection on the model's module: X in T, a a section."""
    R = model.algebra
    rA = model.rank
    out = [R.zero()] * rA
    for k, xk in enumerate(X):
        if R.is_zero(xk):
            continue
        term = [R.zero()] * rA
        Dk = T.anchor[k]
        for c in range(rA):
            term[c] = tuple(linalg.matvec(Dk, list(a[c])))
            for i in range(rA):
                if not R.is_zero(a[i]):
                    term[c] = R.add(term[c], R.mul(seed[k][c][i], a[i]))
        for c in range(rA):
            out[c] = R.add(out[c], R.mul(xk, term[c]))
    return out


def build_adjoint(model, seed=None):
    """Adjoint representation up to homotopy g(A)[2] (+) A[1] (+) T over a
    jet algebra. Refuses models whose anchor does not factor through the
    log frame, whose factored anchor is not a bracket map, or whose kernel
    is not free with unit pivots."""
    R = model.algebra
    if R.kind != "jet":
        raise BuildError("the adjoint construction needs a jet algebra")
    rA = model.rank
    T = log_frame_model(R)
    rT = T.rank
    rho = _factor_anchor(model, T)

    for i in range(rA):
        for j in range(i + 1, rA):
            lhs = _rho_apply(R, rho, model.bracket(model.basis_section(i),
                                                   model.basis_section(j)))
            rhs = T.bracket(_rho_apply_vec(R, rho, i, rA), _rho_apply_vec(R, rho, j, rA))
            if any(not R.is_zero(R.sub(a, b)) for a, b in zip(lhs, rhs)):
                raise BuildError("factored anchor is not a bracket map at "
                                 "(%d, %d)" % (i, j))

    gens = rmodule.rkernel_generators(R, rho, rT, rA)
    try:
        g_cols, _ = rmodule.unit_pivot_echelon(R, gens, rA)
    except rmodule.EchelonFailure as e:
        raise BuildError("adjoint kernel is not free: %s" % e)
    rg = len(g_cols)
    G = rmodule.basis_matrix(R, g_cols, rA)

    try:
        _, im_pivots = rmodule.unit_pivot_echelon(
            R, [[rho[r][c] for r in range(rT)] for c in range(rA)], rT)
        nu_rank = rT - len(im_pivots)
    except rmodule.EchelonFailure:
        nu_rank = None

    if seed is None:
        z = R.zero()
        seed = [[[z] * rA for _ in range(rA)] for _ in range(rT)]

    ranks = {-1: rA, 0: rT}
    if rg:
        ranks[-2] = rg
    bundle = GradedBundle(R, ranks)
    pblocks = {-1: rho}
    if rg:
        pblocks[-2] = G
    partial = EndElement(bundle, 1, pblocks)

    gammas = []
    for i in range(rA):
        ei = model.basis_section(i)
        top = graded.rzeros(R, rT, rT)
        mid = graded.rzeros(R, rA, rA)
        for t in range(rT):
            v = [seed[t][c][i] for c in range(rA)]
            col = _rho_apply(R, rho, v)
            br = T.bracket(_rho_apply(R, rho, ei), _basis(R, rT, t))
            for c in range(rT):
                top[c][t] = R.add(col[c], br[c])
        for b in range(rA):
            X = _rho_apply(R, rho, model.basis_section(b))
            col = _nabla_t_seed(model, T, seed, X, ei)
            br = model.bracket(ei, model.basis_section(b))
            for c in range(rA):
                mid[c][b] = R.add(col[c], br[c])
        blocks = {}
        if not graded.ris_zero(R, top):
            blocks[0] = top
        if not graded.ris_zero(R, mid):
            blocks[-1] = mid
        if rg:
            low = graded.rzeros(R, rg, rg)
            for u in range(rg):
                w = model.bracket(ei, [G[r][u] for r in range(rA)])
                sol = rmodule.rsolve(R, G, w, rA, rg)
                if sol is None:
                    raise BuildError("bracket does not preserve the adjoint kernel")
                for c in range(rg):
                    low[c][u] = sol[c]
            if not graded.ris_zero(R, low):
                blocks[-2] = low
        gammas.append(EndElement(bundle, 0, blocks or None))

    conn = Connection(bundle, model.anchor, gammas)
    curv = ruth.curvature(model, conn)

    omega2 = Form(rA, 2, "end", R, bundle, -1)
    for i in range(rA):
        for j in range(i + 1, rA):
            ei, ej = model.basis_section(i), model.basis_section(j)
            M0 = graded.rzeros(R, rA, rT)
            for t in range(rT):
                tt = _basis(R, rT, t)
                v = _nabla_t_seed(model, T, seed, tt, model.bracket(ei, ej))
                na = _nabla_t_seed(model, T, seed, tt, ei)
                nb = _nabla_t_seed(model, T, seed, tt, ej)
                v = [R.sub(a, b) for a, b in zip(v, model.bracket(na, ej))]
                v = [R.sub(a, b) for a, b in zip(v, model.bracket(ei, nb))]
                bas_i = [gammas[i].block(0)[c][t] for c in range(rT)] if rT else []
                bas_j = [gammas[j].block(0)[c][t] for c in range(rT)] if rT else []
                v = [R.add(a, b) for a, b in zip(v, _nabla_t_seed(model, T, seed, bas_i, ej))]
                v = [R.sub(a, b) for a, b in zip(v, _nabla_t_seed(model, T, seed, bas_j, ei))]
                for c in range(rA):
                    M0[c][t] = v[c]
            N0 = curv.get((i, j)).blocks.get(0)
            if N0 is not None:
                chk = graded.radd(R, graded.rmul(R, rho, M0), N0)
                if not graded.ris_zero(R, chk):
                    raise BuildError("basic curvature does not close the top level")
            elif not graded.ris_zero(R, graded.rmul(R, rho, M0)):
                raise BuildError("basic curvature does not close the top level")
            blocks = {}
            if not graded.ris_zero(R, M0):
                blocks[0] = M0
            if rg:
                N1 = curv.get((i, j)).block(-1)
                rhs = graded.rneg(R, graded.radd(R, N1, graded.rmul(R, M0, rho)))
                M1 = _solve_through(R, G, rhs, rA, rg, rA)
                if M1 is None:
                    raise BuildError("no flat completion at arity 2")
                N2 = curv.get((i, j)).block(-2)
                if not graded.ris_zero(R, graded.radd(R, graded.rmul(R, M1, G), N2)):
                    raise BuildError("no flat completion at arity 2")
                if not graded.ris_zero(R, M1):
                    blocks[-1] = M1
            else:
                N1 = curv.get((i, j)).block(-1)
                if not graded.ris_zero(R, graded.radd(R, N1, graded.rmul(R, M0, rho))):
                    raise BuildError("no flat completion at arity 2")
            if blocks:
                omega2.set((i, j), EndElement(bundle, -1, blocks))

    omegas = {}
    if not omega2.is_zero():
        omegas[2] = omega2
    if rA >= 3 and rg:
        # a^(3) = d(omega2) + [partial, omega3] must vanish; with the sign
        # conventions here [partial, omega3] has blocks -G W at the top
        # level and W rho below, so solve G W = B0 and check W rho = -B1.
        d2 = graded.cov_d(model, conn, omega2)
        omega3 = Form(rA, 3, "end", R, bundle, -2)
        for I in omega3.indices():
            B = d2.values.get(I)
            if B is None:
                continue
            W = _solve_through(R, G, B.block(0), rA, rg, rT)
            if W is None:
                raise BuildError("no flat completion at arity 3")
            B1 = B.block(-1)
            if not graded.ris_zero(R, graded.radd(R, B1, graded.rmul(R, W, rho))):
                raise BuildError("no flat completion at arity 3")
            if not graded.ris_zero(R, W):
                omega3.set(I, EndElement(bundle, -2, {0: W}))
        if not omega3.is_zero():
            omegas[3] = omega3

    sc = SuperConnection(model, bundle, conn, partial, omegas)
    bad = ruth.validate_flat(sc)
    if bad is not None:
        raise BuildError("no flat completion at arity %d" % bad[1])
    return AdjointData(sc=sc, rho=rho, g_basis=G, g_rank=rg, t_model=T,
                       nu_rank=nu_rank)


def _rho_apply_vec(R, rho, i, rA):
    v = [R.zero()] * rA
    v[i] = R.one()
    return _rho_apply(R, rho, v)


def _solve_through(R, G, rhs, rows, mid, cols):
    """Solve G M = rhs columnwise; G is rows x mid, rhs rows x cols."""
    out = graded.rzeros(R, mid, cols)
    for c in range(cols):
        col = [rhs[r][c] for r in range(rows)]
        sol = rmodule.rsolve(R, G, col, rows, mid)
        if sol is None:
            return None
        for r in range(mid):
            out[r][c] = sol[r]
    return out


# ---------------------------------------------------------------------------
# random flat instances and gauge transports

def random_phis(sc, rng):
    """A random invertible degree zero gauge family for the bundle."""
    R = sc.algebra
    bundle = sc.bundle
    e0 = EndElement(bundle, 0)
    for lev in bundle.degrees():
        n = bundle.rank(lev)
        M = graded.rid(R, n)
        for r in range(n):
            for c in range(r + 1, n):
                M[r][c] = R.from_rational(random_rational(rng))
        if R.dim > 1:
            for r in range(n):
                for c in range(n):
                    extra = [F0] * R.dim
                    extra[rng.randrange(1, R.dim)] = random_rational(rng)
                    M[r][c] = R.add(M[r][c], tuple(extra))
        e0.set_block(lev, M)
    phis = {0: graded.end_form_from_endo(sc.model.rank, e0)}
    for k in range(1, min(sc.model.rank, bundle.amplitude) + 1):
        w = Form(sc.model.rank, k, "end", R, bundle, -k)
        probe = EndElement(bundle, -k)
        if not probe.sources():
            break
        for I in w.indices():
            if rng.random() < 0.5:
                continue
            e = EndElement(bundle, -k)
            for src in e.sources():
                m, n = e.block_shape(src)
                e.set_block(src, random_rmat(R, rng, m, n))
            if not e.is_zero():
                w.set(I, e)
        if not w.is_zero():
            phis[k] = w
    return phis


def extend_phis(pair, phis):
    """Zero-extend a gauge family from sub to ambient directions."""
    out = {}
    for k, w in phis.items():
        if k == 0:
            v = Form(pair.ambient.rank, 0, "end", w.algebra, w.bundle, 0)
            v.set((), w.get(()))
        else:
            v = Form(pair.ambient.rank, k, "end", w.algebra, w.bundle, -k)
            for I, e in w.values.items():
                v.set(I, e)
        out[k] = v
    return out


def random_flat_instance(rng):
    """A random (pair, sc_sub, sc_ext) with sc_sub flat, drawn from the
    builders and optionally gauge transported."""
    pairs = zoo_pairs()
    name = rng.choice(sorted(pairs))
    pair = pairs[name]
    if rng.random() < 0.5:
        scA, scL = build_double(pair, rng.randint(1, 2), rng=rng)
    else:
        scA, scL = build_normal(pair, random_l_connection(pair, rng))
    if rng.random() < 0.4:
        phis = random_phis(scA, rng)
        scA = ruth.transport(scA, phis)
        scL = ruth.transport(scL, extend_phis(pair, phis))
    return pair, scA, scL


def random_resolution(pair, rng, k_rank=1, depth=2):
    """A flat module resolving a trivial rank k quotient: ladder levels
    E_{-i} = F_i (+) F_{i+1} carry the shift as differential and the zero
    connection, then a random gauge hides the splitting. The returned
    extension gets random blocks on the quotient directions."""
    R = pair.algebra
    sub = pair.sub_model()
    amb = pair.ambient
    rA = pair.sub_rank
    f = [k_rank] + [rng.randint(1, 2) for _ in range(depth)] + [0]
    bundle = GradedBundle(R, {-i: f[i] + f[i + 1] for i in range(depth + 1)})
    partial = EndElement(bundle, 1)
    for i in range(1, depth + 1):
        M = graded.rzeros(R, f[i - 1] + f[i], f[i] + f[i + 1])
        for t in range(f[i]):
            M[f[i - 1] + t][t] = R.one()
        partial.set_block(-i, M)
    zero = [EndElement(bundle, 0) for _ in range(rA)]
    scA = SuperConnection(sub, bundle,
                          Connection(bundle, sub.anchor, zero), partial, {})
    quot = []
    for _ in range(pair.quotient_rank):
        g = EndElement(bundle, 0)
        for lev in bundle.degrees():
            n = bundle.rank(lev)
            g.set_block(lev, random_rmat(R, rng, n, n))
        quot.append(g)
    scL = SuperConnection(amb, bundle,
                          Connection(bundle, amb.anchor, zero + quot),
                          partial, {})
    phis = random_phis(scA, rng)
    return (ruth.transport(scA, phis),
            ruth.transport(scL, extend_phis(pair, phis)))


def corrupt(sc, rng):
    """Break flatness by perturbing a connection block or a curvature
    correction; returns a superconnection that usually fails D^2 = 0."""
    R = sc.algebra
    bundle = sc.bundle
    gammas = [g.copy() for g in sc.conn.gammas]
    i = rng.randrange(len(gammas))
    lev = rng.choice(bundle.degrees())
    n = bundle.rank(lev)
    M = [row[:] for row in gammas[i].block(lev)]
    M[rng.randrange(n)][rng.randrange(n)] = random_alg_elem(R, rng)
    gammas[i].set_block(lev, M)
    return SuperConnection(sc.model, bundle,
                           Connection(bundle, sc.conn.anchor_mats, gammas),
                           sc.partial, sc.omegas)
