"""Lie algebroid models over a coefficient algebra, and inclusions of pairs.

A model is a free module with a chosen basis, structure coefficients
c[i][j] (a coordinate vector over the basis, entries in the algebra) and an
anchor sending each basis section to a derivation matrix of the algebra.
Everything is finite, so the axioms are checked exhaustively.
"""

from . import linalg
from .linalg import F0, F1


class ModelError(Exception):
    pass


class LieAlgebroidModel:
    def __init__(self, algebra, rank, brackets, anchor_mats):
        """brackets[i][j] = list of rank algebra elements; anchor_mats[i] is a
        dim x dim rational matrix acting on algebra coordinates."""
        self.algebra = algebra
        self.rank = rank
        assert len(brackets) == rank and all(len(r) == rank for r in brackets)
        for row in brackets:
            for cell in row:
                assert len(cell) == rank
        assert len(anchor_mats) == rank
        self.brackets = brackets
        self.anchor = anchor_mats

    def __eq__(self, other):
        if not isinstance(other, LieAlgebroidModel):
            return NotImplemented
        return (self.algebra == other.algebra and self.rank == other.rank
                and self.brackets == other.brackets
                and self.anchor == other.anchor)

    @classmethod
    def abelian(cls, algebra, rank):
        z = algebra.zero()
        br = [[[z] * rank for _ in range(rank)] for _ in range(rank)]
        dim = algebra.dim
        return cls(algebra, rank, br, [linalg.zeros(dim, dim) for _ in range(rank)])

    def zero_section(self):
        return [self.algebra.zero()] * self.rank

    def basis_section(self, i):
        v = self.zero_section()
        v[i] = self.algebra.one()
        return v

    def anchor_of(self, X):
        """Derivation matrix of the section X = sum X_i e_i (X_i in R)."""
        R = self.algebra
        D = linalg.zeros(R.dim, R.dim)
        for i, c in enumerate(X):
            if R.is_zero(c):
                continue
            D = linalg.add(D, linalg.mul(R.mult_op(c), self.anchor[i]))
        return D

    def bracket(self, X, Y):
        """Full bilinear bracket with anchor Leibniz corrections.

        [X, Y] = sum X_i Y_j [e_i, e_j] + rho(X)(Y_j) e_j - rho(Y)(X_i) e_i.
        """
        R = self.algebra
        out = self.zero_section()
        rhoX = self.anchor_of(X)
        rhoY = self.anchor_of(Y)
        for i, xi in enumerate(X):
            if R.is_zero(xi):
                continue
            for j, yj in enumerate(Y):
                if R.is_zero(yj):
                    continue
                coeff = R.mul(xi, yj)
                for k, c in enumerate(self.brackets[i][j]):
                    if not R.is_zero(c):
                        out[k] = R.add(out[k], R.mul(coeff, c))
        for j, yj in enumerate(Y):
            out[j] = R.add(out[j], tuple(linalg.matvec(rhoX, list(yj))))
        for i, xi in enumerate(X):
            out[i] = R.sub(out[i], tuple(linalg.matvec(rhoY, list(xi))))
        return out

    def validate(self):
        """Antisymmetry, anchor values are derivations, anchor is a bracket
        homomorphism, Jacobi. Returns None or (axiom, witness)."""
        R = self.algebra
        r = self.rank
        for i in range(r):
            for j in range(r):
                for k in range(r):
                    s = R.add(self.brackets[i][j][k], self.brackets[j][i][k])
                    if not R.is_zero(s):
                        return ("antisymmetry", (i, j, k))
        for i in range(r):
            if not R.is_derivation(self.anchor[i]):
                return ("anchor_derivation", i)
        basis = [self.basis_section(i) for i in range(r)]
        for i in range(r):
            for j in range(i + 1, r):
                lhs = self.anchor_of(self.bracket(basis[i], basis[j]))
                rhs = linalg.sub(linalg.mul(self.anchor[i], self.anchor[j]),
                                 linalg.mul(self.anchor[j], self.anchor[i]))
                if lhs != rhs:
                    return ("anchor_homomorphism", (i, j))
        for i in range(r):
            for j in range(i + 1, r):
                for k in range(j + 1, r):
                    jac = self.bracket(basis[i], self.bracket(basis[j], basis[k]))
                    jac = [R.sub(a, b) for a, b in zip(
                        jac, self.bracket(self.bracket(basis[i], basis[j]), basis[k]))]
                    jac = [R.sub(a, b) for a, b in zip(
                        jac, self.bracket(basis[j], self.bracket(basis[i], basis[k])))]
                    if any(not R.is_zero(c) for c in jac):
                        return ("jacobi", (i, j, k))
        return None


class LiePair:
    """A basis-aligned inclusion: the first sub_rank basis sections span a
    subalgebroid of the ambient model."""

    def __init__(self, ambient, sub_rank):
        assert 0 <= sub_rank <= ambient.rank
        self.ambient = ambient
        self.sub_rank = sub_rank

    @property
    def algebra(self):
        return self.ambient.algebra

    @property
    def quotient_rank(self):
        return self.ambient.rank - self.sub_rank

    def validate(self):
        err = self.ambient.validate()
        if err is not None:
            return err
        R = self.algebra
        rA = self.sub_rank
        for i in range(rA):
            for j in range(rA):
                for k in range(rA, self.ambient.rank):
                    if not R.is_zero(self.ambient.brackets[i][j][k]):
                        return ("subalgebroid_closure", (i, j, k))
        return None

    def sub_model(self):
        rA = self.sub_rank
        br = [[[self.ambient.brackets[i][j][k] for k in range(rA)]
               for j in range(rA)] for i in range(rA)]
        return LieAlgebroidModel(self.algebra, rA, br, self.ambient.anchor[:rA])

    def bott_gammas(self):
        """Connection coefficients of the Bott representation on the quotient.

        For a direction i < sub_rank, gamma[i][n][m] is the coefficient of
        the n-th quotient basis vector in p([e_i, e_{rA+m}]).
        """
        rA, q = self.sub_rank, self.quotient_rank
        return [[[self.ambient.brackets[i][rA + m][rA + n] for m in range(q)]
                 for n in range(q)] for i in range(rA)]

    def dual_bott_gammas(self):
        """Coefficients of the dual Bott connection on the annihilator of the
        subalgebroid, in the dual quotient basis: the negative transpose."""
        R = self.algebra
        bott = self.bott_gammas()
        q = self.quotient_rank
        return [[[R.neg(bott[i][m][n]) for m in range(q)] for n in range(q)]
                for i in range(self.sub_rank)]
