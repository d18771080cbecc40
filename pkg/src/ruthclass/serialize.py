"""Model and report files.

Models are JSON: an algebra, a bracket table, anchors over the derivation
basis, and optionally a graded bundle with a superconnection over the sub
directions. Scalars are exact; "p/q" strings and integers are accepted,
floats and zero denominators are refused. Reports are written with sorted
keys, two space indent and a trailing newline, and contain no timestamps,
so identical inputs produce identical bytes.
"""

import hashlib
import json
from fractions import Fraction

from . import graded, liemodel, ruth
from .graded import Connection, EndElement, Form, GradedBundle
from .scalars import CoeffAlgebra

FORMAT_MODEL = "ruthclass-model"
FORMAT_SEED = "ruthclass-seed"
FORMAT_REPORT = "ruthclass-report"
VERSION = 1


class ParseError(Exception):
    pass


def _fail(msg):
    raise ParseError(msg)


def frac_from_json(x):
    if isinstance(x, bool) or isinstance(x, float):
        _fail("exact scalars only, got %r" % (x,))
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        try:
            return Fraction(x)
        except (ValueError, ZeroDivisionError):
            _fail("bad scalar %r" % (x,))
    _fail("bad scalar %r" % (x,))


def element_from_json(R, x):
    """A bare scalar means a constant; a list gives coordinates over the
    monomial basis."""
    if isinstance(x, list):
        if len(x) != R.dim:
            _fail("element needs %d coordinates, got %d" % (R.dim, len(x)))
        return tuple(frac_from_json(c) for c in x)
    c = frac_from_json(x)
    return tuple(c if t == R.unit_index else Fraction(0)
                 for t in range(R.dim))


def element_to_json(R, e):
    return [str(c) for c in e]


def matrix_from_json(R, obj, rows, cols, what):
    if not isinstance(obj, list) or len(obj) != rows:
        _fail("%s needs %d rows" % (what, rows))
    out = []
    for row in obj:
        if not isinstance(row, list) or len(row) != cols:
            _fail("%s needs %d columns" % (what, cols))
        out.append([element_from_json(R, x) for x in row])
    return out


def matrix_to_json(R, M):
    return [[element_to_json(R, x) for x in row] for row in M]


def algebra_from_json(obj):
    if not isinstance(obj, dict) or "kind" not in obj:
        _fail("algebra needs a kind")
    kind = obj["kind"]
    if kind == "point":
        return CoeffAlgebra.point()
    if kind == "jet":
        n = obj.get("variables")
        p = obj.get("order")
        if not isinstance(n, int) or not isinstance(p, int) or n < 1 or p < 0:
            _fail("jet algebra needs positive variables and an order")
        return CoeffAlgebra.jet(n, p)
    _fail("unknown algebra kind %r" % (kind,))


def algebra_to_json(R):
    if R.kind == "point":
        return {"kind": "point"}
    n, p = R.jet_params
    return {"kind": "jet", "variables": n, "order": p}


def model_from_json(obj):
    """Build the algebroid model and, when sub_rank is present, the pair."""
    R = algebra_from_json(obj.get("algebra"))
    rank = obj.get("rank")
    if not isinstance(rank, int) or rank < 0:
        _fail("rank must be a nonnegative integer")
    zero = R.zero()
    brackets = [[[zero] * rank for _ in range(rank)] for _ in range(rank)]
    seen = set()
    for ent in obj.get("brackets", []):
        i, j = ent.get("i"), ent.get("j")
        if not (isinstance(i, int) and isinstance(j, int)
                and 0 <= i < rank and 0 <= j < rank and i != j):
            _fail("bracket entry needs distinct indices below the rank")
        if (i, j) in seen or (j, i) in seen:
            _fail("duplicate bracket entry (%d, %d)" % (i, j))
        seen.add((i, j))
        coeffs = ent.get("coeffs")
        if not isinstance(coeffs, list) or len(coeffs) != rank:
            _fail("bracket coeffs need %d entries" % rank)
        vals = [element_from_json(R, c) for c in coeffs]
        brackets[i][j] = vals
        brackets[j][i] = [R.neg(v) for v in vals]
    dbasis = R.derivation_basis()
    anchor = []
    rows = obj.get("anchor")
    if rows is None:
        rows = [[] for _ in range(rank)]
    if not isinstance(rows, list) or len(rows) != rank:
        _fail("anchor needs one row per basis section")
    for row in rows:
        if not isinstance(row, list) or len(row) != len(dbasis):
            _fail("anchor rows run over the %d derivation basis elements"
                  % len(dbasis))
        M = [[Fraction(0)] * R.dim for _ in range(R.dim)]
        for c, D in zip(row, dbasis):
            f = frac_from_json(c)
            for r in range(R.dim):
                for s in range(R.dim):
                    M[r][s] += f * D[r][s]
        anchor.append(M)
    model = liemodel.LieAlgebroidModel(R, rank, brackets, anchor)
    pair = None
    if "sub_rank" in obj:
        sr = obj["sub_rank"]
        if not isinstance(sr, int) or not 0 <= sr <= rank:
            _fail("sub_rank must lie between 0 and the rank")
        pair = liemodel.LiePair(model, sr)
    return model, pair


def bundle_from_json(R, obj):
    if not isinstance(obj, dict) or not obj:
        _fail("bundle needs level ranks")
    ranks = {}
    for key, val in obj.items():
        try:
            lev = int(key)
        except ValueError:
            _fail("bundle level %r is not an integer" % (key,))
        if not isinstance(val, int) or val < 0:
            _fail("bundle rank at level %s must be a nonnegative integer"
                  % key)
        ranks[lev] = val
    return GradedBundle(R, ranks)


def _end_block_in(R, bundle, degree, ent, target, what):
    lev = ent.get("level")
    if not isinstance(lev, int):
        _fail("%s entry needs an integer level" % what)
    rows, cols = bundle.rank(lev + degree), bundle.rank(lev)
    if rows == 0 or cols == 0:
        _fail("%s entry at level %d maps between zero ranks" % (what, lev))
    M = matrix_from_json(R, ent.get("matrix"), rows, cols, what)
    cur = target.blocks.get(lev)
    target.set_block(lev, graded.radd(R, cur, M) if cur is not None else M)


def superconnection_from_json(sub_model, bundle, obj):
    R = bundle.algebra
    rA = sub_model.rank
    partial = EndElement(bundle, 1)
    for ent in obj.get("del", []):
        _end_block_in(R, bundle, 1, ent, partial, "del")
    gammas = [EndElement(bundle, 0) for _ in range(rA)]
    for ent in obj.get("nabla", []):
        d = ent.get("direction")
        if not isinstance(d, int) or not 0 <= d < rA:
            _fail("nabla entry needs a direction below the sub rank")
        _end_block_in(R, bundle, 0, ent, gammas[d], "nabla")
    omegas = {}
    for ent in obj.get("higher", []):
        k = ent.get("arity")
        if not isinstance(k, int) or k < 2:
            _fail("higher entries start at arity 2")
        I = ent.get("index")
        if (not isinstance(I, list) or len(I) != k
                or any(not isinstance(i, int) for i in I)
                or list(I) != sorted(set(I))
                or any(not 0 <= i < rA for i in I)):
            _fail("higher entry needs a strictly increasing index below"
                  " the sub rank")
        if k not in omegas:
            omegas[k] = Form(rA, k, "end", R, bundle, 1 - k)
        w = omegas[k]
        e = w.values.get(tuple(I))
        if e is None:
            e = EndElement(bundle, 1 - k)
        _end_block_in(R, bundle, 1 - k, ent, e, "higher")
        w.set(tuple(I), e)
    conn = Connection(bundle, sub_model.anchor, gammas)
    return ruth.SuperConnection(sub_model, bundle, conn, partial, omegas)


def seed_from_json(pair, bundle, obj):
    """Extension seed: connection blocks for the quotient directions."""
    if obj.get("format") != FORMAT_SEED:
        _fail("not a seed file")
    R = bundle.algebra
    q = pair.quotient_rank
    gammas = [EndElement(bundle, 0) for _ in range(q)]
    for ent in obj.get("gammas", []):
        m = ent.get("direction")
        if not isinstance(m, int) or not 0 <= m < q:
            _fail("seed entry needs a direction below the quotient rank")
        _end_block_in(R, bundle, 0, ent, gammas[m], "seed")
    return gammas


def load_model_file(obj):
    """Returns (pair, sc or None). The superconnection lives over the sub
    directions."""
    if not isinstance(obj, dict):
        _fail("model file must be an object")
    if obj.get("format") != FORMAT_MODEL:
        _fail("not a model file")
    if obj.get("version") != VERSION:
        _fail("unsupported model version %r" % (obj.get("version"),))
    model, pair = model_from_json(obj)
    if pair is None:
        pair = liemodel.LiePair(model, model.rank)
    sc = None
    if "bundle" in obj:
        bundle = bundle_from_json(model.algebra, obj["bundle"])
        sc = superconnection_from_json(pair.sub_model(), bundle,
                                       obj.get("superconnection", {}))
    return pair, sc


# ---------------------------------------------------------------------------
# report side

def end_to_json(R, e):
    return {"degree": e.degree,
            "blocks": {str(lev): matrix_to_json(R, M)
                       for lev, M in sorted(e.blocks.items())}}


def quot_form_to_json(R, w):
    entries = []
    for I in sorted(w.values):
        vals = w.values[I]
        entries.append({"index": list(I),
                        "slots": [end_to_json(R, e) for e in vals]})
    return {"arity": w.arity, "endo": w.vdeg, "entries": entries}


def canonical(obj):
    """Make an object json-ready: exact scalars to strings, tuples to
    lists, integer-keyed dicts to string-keyed ones."""
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, dict):
        return {str(k): canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [canonical(v) for v in obj]
    return obj


def report_text(obj):
    return json.dumps(canonical(obj), sort_keys=True, indent=2) + "\n"


def sha256_of(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        h.update(fh.read())
    return h.hexdigest()


def sha256_of_text(text):
    return hashlib.sha256(text.encode("utf-8")).hexdigest()
