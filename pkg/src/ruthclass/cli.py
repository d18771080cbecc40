"""Command line front end.

Four subcommands: validate checks the axioms of a model file, atiyah
computes the cocycle of an extension and decides exactness, resolve
contracts a resolution and compares receptacle cohomologies, hpt runs the
perturbation transfer. Inputs come from a model file or a named preset;
reports are deterministic JSON on stdout or --output. Exit codes: 0 clean,
2 for axiom or constructibility failures, 1 for unreadable input.
"""

import argparse
import json
import sys

from . import atiyah, examples, hpt, resolution, ruth, serialize
from .examples import BuildError
from .resolution import ResolutionError
from .serialize import ParseError

PRESETS = ("double", "normal", "adjoint")


def _load_preset(name):
    if name == "double":
        pair = examples.sl2_borel()
        sc_sub, sc_ext = examples.build_double(pair, 1)
    elif name == "normal":
        pair = examples.sl2_borel()
        sc_sub, sc_ext = examples.build_normal(pair)
    elif name == "adjoint":
        pair = examples.jet_scaling_pair()
        data = examples.build_adjoint(pair.ambient)
        sc_ext = data.sc
        sc_sub = atiyah.restrict_superconnection(pair, sc_ext)
    else:
        raise ParseError("unknown preset %r" % (name,))
    return pair, sc_sub, sc_ext, {"preset": name}


def _load_package(args):
    """Pair, sub superconnection, extension and input identification."""
    if args.preset and args.model:
        raise ParseError("give a model file or a preset, not both")
    if args.preset:
        pair, sc_sub, sc_ext, ident = _load_preset(args.preset)
        if getattr(args, "extension_seed", None):
            seed = _read_json(args.extension_seed)
            gammas = serialize.seed_from_json(pair, sc_sub.bundle, seed)
            sc_ext = atiyah.extend(pair, sc_sub, gammas)
        return pair, sc_sub, sc_ext, ident
    if not args.model:
        raise ParseError("a model file or --preset is required")
    obj = _read_json(args.model)
    pair, sc_sub = serialize.load_model_file(obj)
    ident = {"sha256": serialize.sha256_of(args.model)}
    sc_ext = None
    if sc_sub is not None:
        gammas = None
        if getattr(args, "extension_seed", None):
            seed = _read_json(args.extension_seed)
            gammas = serialize.seed_from_json(pair, sc_sub.bundle, seed)
        sc_ext = atiyah.extend(pair, sc_sub, gammas)
    return pair, sc_sub, sc_ext, ident


def _read_json(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError("%s: %s" % (path, exc))


def _report(args, command, ident, payload):
    obj = {"format": serialize.FORMAT_REPORT,
           "version": serialize.VERSION,
           "command": command,
           "input": ident}
    obj.update(payload)
    text = serialize.report_text(obj)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_validate(args):
    pair, sc_sub, _, ident = _load_package(args)
    failures = []
    bad = pair.algebra.validate()
    if bad is not None:
        failures.append({"check": "algebra", "axiom": bad[0]})
    bad = pair.ambient.validate()
    if bad is not None:
        failures.append({"check": "model", "axiom": bad[0],
                         "witness": serialize.canonical(bad[1])})
    bad = pair.validate()
    if bad is not None:
        failures.append({"check": "pair", "axiom": bad[0],
                         "witness": serialize.canonical(bad[1])})
    if sc_sub is not None and not failures:
        bad = ruth.validate_flat(sc_sub)
        if bad is not None:
            failures.append({"check": "superconnection", "axiom": bad[0],
                             "arity": bad[1]})
    _report(args, "validate", ident,
            {"ok": not failures, "failures": failures})
    return 0 if not failures else 2


def _require_sc(sc_sub):
    if sc_sub is None:
        raise ParseError("this command needs a bundle and superconnection")


def _hat_range(pair, bundle):
    degs = bundle.end_degrees()
    return range(min(degs), pair.sub_rank + max(degs) + 1)


def cmd_atiyah(args):
    pair, sc_sub, sc_ext, ident = _load_package(args)
    _require_sc(sc_sub)
    R = pair.algebra
    bad = ruth.validate_flat(sc_sub)
    if bad is not None:
        _report(args, "atiyah", ident,
                {"ok": False,
                 "failures": [{"check": "superconnection",
                               "axiom": bad[0], "arity": bad[1]}]})
        return 2
    alpha = atiyah.atiyah_cocycle(pair, sc_ext)
    ex = atiyah.solve_exactness(pair, sc_ext, alpha)
    dims = {str(t): atiyah.cohomology_dim(pair, sc_ext, t)
            for t in _hat_range(pair, sc_sub.bundle)}
    payload = {"ok": True,
               "class": [serialize.quot_form_to_json(R, w)
                         for _, w in sorted(alpha.items())],
               "exact": ex.exact,
               "dims": dims}
    if args.witness:
        if ex.exact:
            payload["witness"] = serialize.canonical(ex.witness)
        else:
            payload["certificate"] = serialize.canonical(ex.certificate)
    _report(args, "atiyah", ident, payload)
    return 0


def cmd_resolve(args):
    pair, sc_sub, sc_ext, ident = _load_package(args)
    _require_sc(sc_sub)
    R = pair.algebra
    contr = resolution.build_contraction(sc_sub.bundle, sc_sub.partial)
    connK = resolution.quotient_connection(sc_sub, contr)
    end_dims = resolution.end_cohomology_dims(contr)
    classical = resolution.classical_atiyah(pair, sc_ext, contr)
    brst = resolution.compare_brst(pair, sc_sub, sc_ext, contr)
    payload = {"ok": True,
               "module_rank": contr.k_rank,
               "end_cohomology": {str(j): d
                                  for j, d in sorted(end_dims.items())},
               "quotient_nabla": [serialize.end_to_json(R, g)
                                  for g in connK.gammas],
               "classical_class": serialize.quot_form_to_json(R, classical),
               "brst": {"dims_resolution": {str(t): d for t, d in
                                            sorted(brst.dims_resolution.items())},
                        "dims_module": {str(t): d for t, d in
                                        sorted(brst.dims_module.items())},
                        "chain_level_equal": brst.chain_level_equal,
                        "equal": brst.equal}}
    _report(args, "resolve", ident, payload)
    return 0


def cmd_hpt(args):
    pair, sc_sub, sc_ext, ident = _load_package(args)
    _require_sc(sc_sub)
    contr = resolution.build_contraction(sc_sub.bundle, sc_sub.partial)
    pc = hpt.perturb(sc_sub, contr)
    big = hpt.vec_elem_basis(sc_sub.model, sc_sub.bundle)
    small = hpt.vec_elem_basis(sc_sub.model, contr.k_bundle())
    bad = pc.validate(big, small)
    quotient_ok = hpt.small_equals_quotient(pc, sc_sub, contr)
    scn = examples.build_normal(pair)[0]
    transfer = hpt.hom_transfer(pair, sc_sub, sc_ext, scn)
    payload = {"ok": bad is None and quotient_ok,
               "axioms": "ok" if bad is None else bad[0],
               "small_equals_quotient": quotient_ok,
               "transfer": {"chain_map": transfer.chain_map,
                            "dims_small": {str(t): d for t, d in
                                           sorted(transfer.dims_small.items())},
                            "dims_receptacle": {str(t): d for t, d in
                                                sorted(transfer.dims_receptacle.items())},
                            "matches": transfer.matches}}
    _report(args, "hpt", ident, payload)
    return 0 if payload["ok"] else 2


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ruthclass",
        description="Atiyah cocycles and classes of representations up to"
                    " homotopy, in exact arithmetic.")
    sub = parser.add_subparsers(dest="command", required=True)
    specs = {"validate": cmd_validate, "atiyah": cmd_atiyah,
             "resolve": cmd_resolve, "hpt": cmd_hpt}
    for name, fn in specs.items():
        p = sub.add_parser(name)
        p.add_argument("model", nargs="?", default=None,
                       help="model file (or use --preset)")
        p.add_argument("--preset", choices=PRESETS)
        p.add_argument("--output", default=None)
        if name in ("atiyah", "resolve", "hpt"):
            p.add_argument("--extension-seed", dest="extension_seed",
                           default=None)
        if name == "atiyah":
            p.add_argument("--witness", action="store_true")
        p.set_defaults(handler=fn)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except (ParseError, OSError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1
    except (BuildError, ResolutionError, atiyah.CocycleError,
            ruth.TransportError) as exc:
        obj = {"format": serialize.FORMAT_REPORT,
               "version": serialize.VERSION,
               "command": args.command,
               "ok": False,
               "failures": [{"check": "construction", "error": str(exc)}]}
        text = serialize.report_text(obj)
        if args.output:
            with open(args.output, "w", encoding="utf-8") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        return 2


if __name__ == "__main__":
    sys.exit(main())
