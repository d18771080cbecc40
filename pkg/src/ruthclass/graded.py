"""Graded free modules, endomorphisms, and multilinear forms.

Forms are stored only on strictly increasing multi-indices of base
directions; evaluation at arbitrary tuples sorts and signs. Wedge products
are shuffle sums, so no combinatorial prefactors appear anywhere.

Sign conventions used throughout the package:
  (eta ox alpha) ^ (omega ox beta) = (-1)^(i q) (eta ^ omega) ox (alpha beta)
with i the endomorphism degree of the first value and q the arity of the
second factor, and
  [omega, omega'] = omega ^ omega' - (-1)^(m n) omega' ^ omega
with m, n the total (arity + value) degrees.
"""

import itertools

from . import linalg
from .linalg import F0, F1


# ---------------------------------------------------------------------------
# matrices with entries in the coefficient algebra

def rzeros(R, m, n):
    z = R.zero()
    return [[z] * n for _ in range(m)]


def rid(R, n):
    M = rzeros(R, n, n)
    for i in range(n):
        M[i][i] = R.one()
    return M


def rq(R, M):
    """Embed a rational matrix as an algebra-valued matrix."""
    return [[R.from_rational(x) for x in row] for row in M]


def radd(R, A, B):
    return [[R.add(a, b) for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]


def rsub(R, A, B):
    return [[R.sub(a, b) for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]


def rneg(R, A):
    return [[R.neg(a) for a in row] for row in A]


def rsmul(R, f, A):
    return [[R.mul(f, a) for a in row] for row in A]


def rfrac_mul(R, c, A):
    return [[R.smul(c, a) for a in row] for row in A]


def rmul(R, A, B):
    m = len(A)
    k = len(B)
    n = len(B[0]) if k else 0
    out = rzeros(R, m, n)
    for i in range(m):
        for t in range(k):
            a = A[i][t]
            if R.is_zero(a):
                continue
            for j in range(n):
                if not R.is_zero(B[t][j]):
                    out[i][j] = R.add(out[i][j], R.mul(a, B[t][j]))
    return out


def rmatvec(R, A, v):
    out = []
    for row in A:
        acc = R.zero()
        for a, x in zip(row, v):
            if not (R.is_zero(a) or R.is_zero(x)):
                acc = R.add(acc, R.mul(a, x))
        out.append(acc)
    return out


def rderive(R, D, A):
    """Apply a derivation matrix entrywise."""
    return [[tuple(linalg.matvec(D, list(a))) for a in row] for row in A]


def ris_zero(R, A):
    return all(R.is_zero(a) for row in A for a in row)


def req(R, A, B):
    return all(a == b for ra, rb in zip(A, B) for a, b in zip(ra, rb))


def rtranspose(A, rows, cols):
    return [[A[i][j] for i in range(rows)] for j in range(cols)]


# ---------------------------------------------------------------------------

class GradedBundle:
    """Finite family of free modules over one coefficient algebra."""

    def __init__(self, algebra, ranks):
        self.algebra = algebra
        self.ranks = {int(d): int(r) for d, r in ranks.items() if int(r) != 0}
        assert all(r > 0 for r in self.ranks.values())

    def degrees(self):
        return sorted(self.ranks)

    def rank(self, d):
        return self.ranks.get(d, 0)

    def total_rank(self):
        return sum(self.ranks.values())

    @property
    def amplitude(self):
        if not self.ranks:
            return 0
        return max(self.ranks) - min(self.ranks)

    def end_degrees(self):
        """Degrees j where End_j can be nonzero."""
        ds = self.degrees()
        if not ds:
            return []
        lo, hi = min(ds), max(ds)
        return list(range(lo - hi, hi - lo + 1))

    def end_rank(self, j):
        return sum(self.rank(i) * self.rank(i + j) for i in self.degrees())


# -- elements of the bundle: dict level -> list of algebra elements

def vec_zero(bundle):
    return {d: [bundle.algebra.zero()] * bundle.rank(d) for d in bundle.degrees()}


def vec_basis(bundle):
    """All (level, index) homogeneous basis elements, in degree order."""
    out = []
    for d in bundle.degrees():
        for i in range(bundle.rank(d)):
            out.append((d, i))
    return out


# ---------------------------------------------------------------------------

class EndElement:
    """Degree j endomorphism: blocks[src] maps level src to level src + j.

    Blocks are stored only where both levels have nonzero rank; a missing
    block is zero.
    """

    def __init__(self, bundle, degree, blocks=None):
        self.bundle = bundle
        self.degree = degree
        self.blocks = {}
        if blocks:
            for src, M in blocks.items():
                self.set_block(src, M)

    def block_shape(self, src):
        return (self.bundle.rank(src + self.degree), self.bundle.rank(src))

    def sources(self):
        return [s for s in self.bundle.degrees() if self.bundle.rank(s + self.degree)]

    def set_block(self, src, M):
        m, n = self.block_shape(src)
        assert m and n, "zero-rank block at level %d" % src
        assert len(M) == m and all(len(r) == n for r in M)
        self.blocks[src] = M

    def block(self, src):
        if src in self.blocks:
            return self.blocks[src]
        m, n = self.block_shape(src)
        return rzeros(self.bundle.algebra, m, n)

    @classmethod
    def zero(cls, bundle, degree):
        return cls(bundle, degree)

    @classmethod
    def identity(cls, bundle):
        R = bundle.algebra
        e = cls(bundle, 0)
        for d in bundle.degrees():
            e.set_block(d, rid(R, bundle.rank(d)))
        return e

    def copy(self):
        return EndElement(self.bundle, self.degree,
                          {s: [row[:] for row in M] for s, M in self.blocks.items()})

    def add(self, other):
        assert self.degree == other.degree
        R = self.bundle.algebra
        out = EndElement(self.bundle, self.degree)
        for s in set(self.blocks) | set(other.blocks):
            out.set_block(s, radd(R, self.block(s), other.block(s)))
        return out

    def sub(self, other):
        return self.add(other.neg())

    def neg(self):
        R = self.bundle.algebra
        return EndElement(self.bundle, self.degree,
                          {s: rneg(R, M) for s, M in self.blocks.items()})

    def scale_frac(self, c):
        R = self.bundle.algebra
        return EndElement(self.bundle, self.degree,
                          {s: rfrac_mul(R, c, M) for s, M in self.blocks.items()})

    def scale_alg(self, f):
        R = self.bundle.algebra
        return EndElement(self.bundle, self.degree,
                          {s: rsmul(R, f, M) for s, M in self.blocks.items()})

    def compose(self, other):
        """self after other."""
        R = self.bundle.algebra
        out = EndElement(self.bundle, self.degree + other.degree)
        for src, M in other.blocks.items():
            mid = src + other.degree
            if mid in self.blocks:
                tgt_rank = self.bundle.rank(src + out.degree)
                if tgt_rank:
                    out.set_block(src, rmul(R, self.blocks[mid], M))
        return out

    def commutator(self, other):
        sign = -1 if (self.degree * other.degree) % 2 else 1
        second = other.compose(self).scale_frac(linalg.frac(sign))
        return self.compose(other).sub(second)

    def apply(self, vec):
        """Apply to a dict level -> coordinate list; returns same shape."""
        R = self.bundle.algebra
        out = vec_zero(self.bundle)
        for src, M in self.blocks.items():
            v = vec.get(src)
            if v is None:
                continue
            tgt = src + self.degree
            img = rmatvec(R, M, v)
            out[tgt] = [R.add(a, b) for a, b in zip(out[tgt], img)]
        return out

    def is_zero(self):
        R = self.bundle.algebra
        return all(ris_zero(R, M) for M in self.blocks.values())

    def eq(self, other):
        return self.sub(other).is_zero()

    def derive(self, D):
        """Entrywise derivation of all blocks."""
        R = self.bundle.algebra
        return EndElement(self.bundle, self.degree,
                          {s: rderive(R, D, M) for s, M in self.blocks.items()})


def end_flatten(e):
    """Deterministic rational coordinates of an EndElement."""
    out = []
    for src in e.sources():
        for row in e.block(src):
            for entry in row:
                out.extend(entry)
    return out


def end_dim(bundle, j):
    return bundle.end_rank(j) * bundle.algebra.dim


def end_unflatten(bundle, j, coords):
    e = EndElement(bundle, j)
    R = bundle.algebra
    pos = 0
    for src in e.sources():
        m, n = e.block_shape(src)
        M = rzeros(R, m, n)
        for r in range(m):
            for c in range(n):
                M[r][c] = tuple(coords[pos:pos + R.dim])
                pos += R.dim
        if not ris_zero(R, M):
            e.set_block(src, M)
    assert pos == len(coords)
    return e


# ---------------------------------------------------------------------------
# forms

VKINDS = ("scal", "vec", "end", "quot")


class Form:
    """Alternating multilinear form on base directions, values per vkind:
      scal: algebra element
      vec:  coordinate list at a single bundle level (vdeg)
      end:  EndElement of degree vdeg
      quot: list of qrank EndElements of degree vdeg (one per quotient slot)
    """

    def __init__(self, base_rank, arity, vkind, algebra,
                 bundle=None, vdeg=None, qrank=0):
        assert vkind in VKINDS
        self.base_rank = base_rank
        self.arity = arity
        self.vkind = vkind
        self.algebra = algebra
        self.bundle = bundle
        self.vdeg = vdeg
        self.qrank = qrank
        self.values = {}

    # value helpers -----------------------------------------------------

    def val_zero(self):
        if self.vkind == "scal":
            return self.algebra.zero()
        if self.vkind == "vec":
            return [self.algebra.zero()] * self.bundle.rank(self.vdeg)
        if self.vkind == "end":
            return EndElement.zero(self.bundle, self.vdeg)
        return [EndElement.zero(self.bundle, self.vdeg) for _ in range(self.qrank)]

    def val_add(self, a, b):
        R = self.algebra
        if self.vkind == "scal":
            return R.add(a, b)
        if self.vkind == "vec":
            return [R.add(x, y) for x, y in zip(a, b)]
        if self.vkind == "end":
            return a.add(b)
        return [x.add(y) for x, y in zip(a, b)]

    def val_scale_frac(self, c, a):
        R = self.algebra
        if self.vkind == "scal":
            return R.smul(c, a)
        if self.vkind == "vec":
            return [R.smul(c, x) for x in a]
        if self.vkind == "end":
            return a.scale_frac(c)
        return [x.scale_frac(c) for x in a]

    def val_scale_alg(self, f, a):
        R = self.algebra
        if self.vkind == "scal":
            return R.mul(f, a)
        if self.vkind == "vec":
            return [R.mul(f, x) for x in a]
        if self.vkind == "end":
            return a.scale_alg(f)
        return [x.scale_alg(f) for x in a]

    def val_is_zero(self, a):
        R = self.algebra
        if self.vkind == "scal":
            return R.is_zero(a)
        if self.vkind == "vec":
            return all(R.is_zero(x) for x in a)
        if self.vkind == "end":
            return a.is_zero()
        return all(x.is_zero() for x in a)

    # slot access --------------------------------------------------------

    def clone_empty(self, arity=None, vdeg=None):
        return Form(self.base_rank, self.arity if arity is None else arity,
                    self.vkind, self.algebra, self.bundle,
                    self.vdeg if vdeg is None else vdeg, self.qrank)

    def get(self, I):
        assert len(I) == self.arity
        return self.values.get(tuple(I), self.val_zero())

    def set(self, I, v):
        I = tuple(I)
        assert len(I) == self.arity and all(a < b for a, b in zip(I, I[1:]))
        assert all(0 <= i < self.base_rank for i in I)
        if self.val_is_zero(v):
            self.values.pop(I, None)
        else:
            self.values[I] = v

    def add_at(self, I, v):
        self.set(I, self.val_add(self.get(I), v))

    def eval_at(self, J):
        """Evaluate at an arbitrary tuple: sorts, signs, kills repeats."""
        J = tuple(J)
        assert len(J) == self.arity
        if len(set(J)) != len(J):
            return self.val_zero()
        order = sorted(range(len(J)), key=lambda t: J[t])
        inv = sum(1 for a in range(len(J)) for b in range(a + 1, len(J))
                  if J[a] > J[b])
        v = self.get(tuple(J[t] for t in order))
        return v if inv % 2 == 0 else self.val_scale_frac(F1 * -1, v)

    def indices(self):
        return itertools.combinations(range(self.base_rank), self.arity)

    def add(self, other):
        out = self.clone_empty()
        for I in self.indices():
            out.set(I, self.val_add(self.get(I), other.get(I)))
        return out

    def sub(self, other):
        return self.add(other.scale_frac(F1 * -1))

    def scale_frac(self, c):
        out = self.clone_empty()
        for I, v in self.values.items():
            out.set(I, self.val_scale_frac(c, v))
        return out

    def is_zero(self):
        return all(self.val_is_zero(v) for v in self.values.values())

    def eq(self, other):
        return self.sub(other).is_zero()

    def endo_degree(self):
        if self.vkind in ("end", "quot"):
            return self.vdeg
        if self.vkind == "vec":
            return self.vdeg
        return 0

    def total_degree(self):
        return self.arity + self.endo_degree()


def splits(I, k1):
    """Yield (S, T, sign) over all (k1, len-k1) shuffles of the tuple I."""
    n = len(I)
    for P in itertools.combinations(range(n), k1):
        S = tuple(I[p] for p in P)
        T = tuple(I[p] for p in range(n) if p not in P)
        inv = sum(p - t for t, p in enumerate(P))
        yield S, T, (-1) ** inv


def _compose_values(kind1, kind2, F, G, v1, v2):
    R = F.algebra
    if kind2 == "scal":
        if kind1 == "scal":
            return R.mul(v1, v2)
        return F.val_scale_alg(v2, v1)
    if kind1 == "scal":
        return G.val_scale_alg(v1, v2)
    if kind1 == "end" and kind2 == "end":
        return v1.compose(v2)
    if kind1 == "end" and kind2 == "vec":
        out = [R.zero()] * F.bundle.rank(G.vdeg + F.vdeg)
        M = v1.blocks.get(G.vdeg)
        if M is not None:
            out = rmatvec(R, M, v2)
        return out
    if kind1 == "end" and kind2 == "quot":
        return [v1.compose(x) for x in v2]
    if kind1 == "quot" and kind2 == "end":
        return [x.compose(v2) for x in v1]
    raise TypeError("unsupported wedge %s ^ %s" % (kind1, kind2))


def wedge(F, G):
    """Shuffle-sum wedge with the Koszul sign (-1)^(i q)."""
    k1, k2 = F.arity, G.arity
    kind1, kind2 = F.vkind, G.vkind
    if kind1 == "quot" and kind2 == "quot":
        raise TypeError("two quotient slots")
    if kind1 == "vec" and kind2 != "scal":
        raise TypeError("vector values compose with nothing on their right")
    out_kind = kind1 if kind2 in ("scal",) else kind2
    if kind1 == "end" and kind2 == "end":
        out_kind = "end"
    if "quot" in (kind1, kind2):
        out_kind = "quot"
    if kind2 == "vec":
        out_kind = "vec"
    vdeg = (F.endo_degree() if kind1 != "scal" else 0) + \
           (G.endo_degree() if kind2 != "scal" else 0)
    out = Form(F.base_rank, k1 + k2, out_kind, F.algebra,
               F.bundle if F.bundle is not None else G.bundle,
               vdeg if out_kind != "scal" else None,
               F.qrank if kind1 == "quot" else G.qrank)
    sgn_koszul = (-1) ** ((F.endo_degree() * k2) % 2)
    for I in out.indices():
        acc = out.val_zero()
        hit = False
        for S, T, sg in splits(I, k1):
            v1 = F.values.get(S)
            if v1 is None:
                continue
            v2 = G.values.get(T)
            if v2 is None:
                continue
            term = _compose_values(kind1, kind2, F, G, v1, v2)
            acc = out.val_add(acc, out.val_scale_frac(linalg.frac(sg * sgn_koszul), term))
            hit = True
        if hit:
            out.set(I, acc)
    return out


def commutator(F, G):
    """[F, G] = F ^ G - (-1)^(mn) G ^ F with total degrees m, n."""
    m = F.total_degree()
    n = G.total_degree()
    sign = (-1) ** ((m * n) % 2)
    return wedge(F, G).sub(wedge(G, F).scale_frac(linalg.frac(sign)))


def end_zero_form(base_rank, bundle, arity, j):
    return Form(base_rank, arity, "end", bundle.algebra, bundle, j)


def end_form_from_endo(base_rank, e):
    """An endomorphism as an arity-0 form."""
    f = Form(base_rank, 0, "end", e.bundle.algebra, e.bundle, e.degree)
    f.set((), e)
    return f


# ---------------------------------------------------------------------------
# connections and the covariant differential

class Connection:
    """Per-direction covariant derivative on a graded bundle.

    anchor_mats[d] is the derivation matrix of the base direction, gammas[d]
    a degree 0 EndElement of coefficients, so that
    nabla_d = (entrywise derivation) + gamma_d.
    """

    def __init__(self, bundle, anchor_mats, gammas):
        self.bundle = bundle
        self.anchor_mats = anchor_mats
        self.gammas = gammas
        assert len(anchor_mats) == len(gammas)
        for g in gammas:
            assert g.degree == 0

    @property
    def directions(self):
        return len(self.gammas)

    def nabla_vec(self, d, level, v):
        R = self.bundle.algebra
        out = [tuple(linalg.matvec(self.anchor_mats[d], list(x))) for x in v]
        M = self.gammas[d].blocks.get(level)
        if M is not None:
            img = rmatvec(R, M, v)
            out = [R.add(a, b) for a, b in zip(out, img)]
        return out

    def nabla_end(self, d, e):
        """Adjoint action [nabla_d, e]: derivation entrywise plus commutator
        with the coefficient block (degree 0, ordinary commutator)."""
        out = e.derive(self.anchor_mats[d])
        g = self.gammas[d]
        return out.add(g.compose(e)).sub(e.compose(g))


def cov_d(model, conn, F):
    """Covariant Chevalley-Eilenberg differential of a form over the model's
    directions. Supports scal (anchor only), vec, and end forms."""
    R = F.algebra
    k = F.arity
    out = F.clone_empty(arity=k + 1)
    if k + 1 > F.base_rank:
        return out
    assert F.base_rank == model.rank
    for I in out.indices():
        acc = out.val_zero()
        for t in range(k + 1):
            idx = I[t]
            rest = I[:t] + I[t + 1:]
            v = F.values.get(rest)
            if v is not None:
                if F.vkind == "scal":
                    term = tuple(linalg.matvec(model.anchor[idx], list(v)))
                elif F.vkind == "vec":
                    term = conn.nabla_vec(idx, F.vdeg, v)
                else:
                    term = conn.nabla_end(idx, v)
                if t % 2:
                    term = out.val_scale_frac(F1 * -1, term)
                acc = out.val_add(acc, term)
        for s in range(k + 1):
            for t in range(s + 1, k + 1):
                rest = tuple(x for u, x in enumerate(I) if u not in (s, t))
                coeffs = model.brackets[I[s]][I[t]]
                for m, c in enumerate(coeffs):
                    if R.is_zero(c):
                        continue
                    v = F.eval_at((m,) + rest)
                    if F.val_is_zero(v):
                        continue
                    term = F.val_scale_alg(c, v)
                    if (s + t) % 2:
                        term = out.val_scale_frac(F1 * -1, term)
                    acc = out.val_add(acc, term)
        if not out.val_is_zero(acc):
            out.set(I, acc)
    return out


# ---------------------------------------------------------------------------
# deterministic flattening of forms

def val_flatten(F, v):
    out = []
    if F.vkind == "scal":
        out.extend(v)
    elif F.vkind == "vec":
        for x in v:
            out.extend(x)
    elif F.vkind == "end":
        out.extend(end_flatten(v))
    else:
        for e in v:
            out.extend(end_flatten(e))
    return out


def val_dim(F):
    R = F.algebra
    if F.vkind == "scal":
        return R.dim
    if F.vkind == "vec":
        return F.bundle.rank(F.vdeg) * R.dim
    if F.vkind == "end":
        return end_dim(F.bundle, F.vdeg)
    return F.qrank * end_dim(F.bundle, F.vdeg)


def val_unflatten(F, coords):
    R = F.algebra
    if F.vkind == "scal":
        return tuple(coords)
    if F.vkind == "vec":
        n = F.bundle.rank(F.vdeg)
        return [tuple(coords[i * R.dim:(i + 1) * R.dim]) for i in range(n)]
    if F.vkind == "end":
        return end_unflatten(F.bundle, F.vdeg, coords)
    d = end_dim(F.bundle, F.vdeg)
    return [end_unflatten(F.bundle, F.vdeg, coords[m * d:(m + 1) * d])
            for m in range(F.qrank)]


def form_flatten(F):
    out = []
    for I in F.indices():
        out.extend(val_flatten(F, F.get(I)))
    return out


def form_dim(F):
    import math
    return math.comb(F.base_rank, F.arity) * val_dim(F)


def form_unflatten(template, coords):
    F = template.clone_empty()
    d = val_dim(F)
    pos = 0
    for I in F.indices():
        v = val_unflatten(F, coords[pos:pos + d])
        pos += d
        if not F.val_is_zero(v):
            F.set(I, v)
    assert pos == len(coords)
    return F
