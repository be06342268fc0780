"""Command-line interface.

Exit status: 0 on success, 2 when an input violates a precondition of the
underlying procedure (the message names it), 1 on usage errors.
"""
import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import catalog
from .causal import effect_ambiguity
from .distribution import observable_distribution, tensor_from_json
from .equivalence import (
    reversal_path,
    same_skeleton_and_immoralities,
    transfer_parameters,
)
from .errors import IdentificationError, ModelError
from .fiber import (
    CLUSTER_TOL,
    INFINITE_QUORUM,
    JACOBIAN_SEEDS,
    RESIDUAL_TOL,
    catalog_report,
    format_catalog,
    jacobian_survey,
    multistart_fiber_search,
    observable_dim,
    observable_jacobian_rank,
)
from .identify import identify, procedure_for
from .model import (
    model_from_json,
    parameter_dimension,
    parameters_from_json,
    relabel,
    sample_generic_parameters,
)
from .orbits import canonicalize
from .reductions import canonical_classes
from .scalar import FLOAT, MODES, RATIONAL, text_scalar

EXIT_OK, EXIT_USAGE, EXIT_PRECONDITION = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# --- input helpers ----------------------------------------------------------

def _read_json(path):
    try:
        if path == "-":
            return json.load(sys.stdin)
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise UsageError(f"no such file: {path}") from None
    except json.JSONDecodeError as exc:
        raise ModelError(f"{path} is not valid JSON: {exc}") from None


def load_model(ref):
    """A catalog id (e.g. ``4-3e``) or a path to a model JSON document."""
    if ref in catalog.catalog_ids():
        return catalog.get_model(ref)
    if not Path(ref).exists():
        raise UsageError(
            f"{ref!r} is neither a catalog model ({', '.join(catalog.catalog_ids())}) nor a file"
        )
    doc = _read_json(ref)
    if "model" in doc and isinstance(doc["model"], dict):
        doc = doc["model"]
    return model_from_json(doc, name=doc.get("name", Path(ref).stem))


def load_tensor(path):
    """A tensor JSON document, or the ``tensor`` field of ``simulate`` output."""
    doc = _read_json(path)
    if "tensor" in doc:
        doc = doc["tensor"]
    try:
        return tensor_from_json(doc)
    except KeyError as exc:
        raise ModelError(f"tensor document lacks field {exc}") from None


def load_parameters(model, path):
    doc = _read_json(path)
    if "parameters" in doc:
        doc = doc["parameters"]
    return parameters_from_json(model, doc)


def _model_id(model):
    return model.name or "model"


# --- text rendering ---------------------------------------------------------

def _rows(arr):
    arr = np.asarray(arr)
    return "; ".join(" ".join(text_scalar(v) for v in row) for row in arr.reshape(arr.shape[0], -1))


def _params_text(theta, indent="  "):
    return "\n".join(f"{indent}X{v}: [{_rows(theta[v])}]" for v in sorted(theta.cpts))


def _checks_text(checks):
    lines = []
    for name, c in checks.items():
        d = c.to_json()
        w = "" if d["witness"] is None else f" ({d['witness']})"
        lines.append(f"  {name}: {'pass' if c.passed else 'FAIL'}{w}")
    return "\n".join(lines)


def _emit(args, doc, text):
    if args.format == "json":
        print(json.dumps(doc, indent=2))
    else:
        print(text)


# --- subcommands --------------------------------------------------------------

def cmd_dim(args):
    model = load_model(args.model)
    dim = parameter_dimension(model)
    obs = observable_dim(model)
    _emit(args, {"model": _model_id(model), "dim_theta": dim, "obs_dim": obs}, str(dim))


def cmd_simulate(args):
    model = load_model(args.model)
    theta = sample_generic_parameters(model, args.seed, mode=args.mode or FLOAT)
    tensor = observable_distribution(model, theta)
    doc = {
        "model": model.to_json() | {"name": _model_id(model)},
        "seed": args.seed,
        "mode": theta.mode,
        "parameters": theta.to_json(),
        "tensor": tensor.to_json(),
    }
    values = " ".join(text_scalar(v) for v in tensor.values.ravel())
    text = (f"model {_model_id(model)}, seed {args.seed} ({theta.mode})\nparameters:\n"
            f"{_params_text(theta)}\nobservable tensor over {list(tensor.variables)} "
            f"(row-major):\n  {values}")
    _emit(args, doc, text)


def cmd_identify(args):
    model = load_model(args.model)
    res = identify(model, load_tensor(args.tensor), args.mode)
    doc = res.to_json() | {"model": _model_id(model)}
    parts = [f"model {_model_id(model)} ({res.mode}): {res.k} candidates",
             "preconditions:", _checks_text(res.preconditions)]
    for k, cand in enumerate(res.candidates, 1):
        parts += [f"candidate {k}:", _params_text(cand)]
    _emit(args, doc, "\n".join(parts))


def _interior(theta):
    return all(np.all((np.asarray(theta[v], dtype=float) > 0) & (np.asarray(theta[v], dtype=float) < 1))
               for v in theta.cpts)


def cmd_fiber(args):
    model = load_model(args.model)
    dim, obs = parameter_dimension(model), observable_dim(model)
    doc = {"model": _model_id(model), "dim_theta": dim, "obs_dim": obs}
    if procedure_for(model) is None:
        ranks, generic, deviating = jacobian_survey(model, JACOBIAN_SEEDS)
        deficient = sum(r < dim for r in ranks)
        infinite = deficient >= INFINITE_QUORUM
        doc.update(evidence="jacobian-deficiency", jacobian_rank=generic,
                   deficient_seeds=deficient, seeds=len(ranks),
                   k_observed="infinite" if infinite else None)
        text = (f"model {_model_id(model)}: dim(Theta)={dim}, 2^A-1={obs}\n"
                f"no finite-fiber procedure; generic Jacobian rank {generic} "
                f"(deficient at {deficient}/{len(ranks)} seeds)\n"
                f"k = {'infinite' if infinite else 'undetermined'}")
        _emit(args, doc, text)
        return
    if args.tensor is None:
        raise UsageError(f"fiber {args.model} needs a tensor")
    res = identify(model, load_tensor(args.tensor), args.mode)
    classes = canonical_classes(model, res.candidates, tol=0 if res.mode == RATIONAL else 1e-9)
    rep = res.candidates[0].to_float()
    rank = observable_jacobian_rank(model, rep) if _interior(rep) else None
    doc.update(evidence="recovery-roundtrip", mode=res.mode, k_observed=res.k,
               canonical_classes=len(classes), jacobian_rank=rank,
               canonical=[c.to_json() for c in classes],
               preconditions={k: v.to_json() for k, v in res.preconditions.items()})
    parts = [f"model {_model_id(model)} ({res.mode}): dim(Theta)={dim}, 2^A-1={obs}",
             f"fiber size {res.k}, {len(classes)} after canonicalization, "
             f"Jacobian rank {rank if rank is not None else 'n/a (boundary)'}"]
    for k, c in enumerate(classes, 1):
        parts += [f"canonical {k}:", _params_text(c)]
    _emit(args, doc, "\n".join(parts))


def _relabeling(a, b, given):
    if given:
        try:
            return {int(x): int(y) for x, y in (p.split(":") for p in given.split(","))}
        except ValueError:
            raise UsageError(f"--relabel expects pairs like 1:2,2:1, got {given!r}") from None
    return catalog.RELABELINGS.get((a.name, b.name))


def cmd_equiv(args):
    a, b = load_model(args.model_a), load_model(args.model_b)
    mapping = _relabeling(a, b, args.relabel)
    src = relabel(a, None, mapping)[0] if mapping else a
    path = reversal_path(src, b) if src.nodes == b.nodes else None
    oracle = same_skeleton_and_immoralities(src, b)
    doc = {
        "model_a": _model_id(a), "model_b": _model_id(b),
        "relabeling": {str(k): v for k, v in mapping.items()} if mapping else None,
        "equivalent": path is not None,
        "skeleton_immorality_check": oracle,
        "reversals": [list(e) for e in path] if path is not None else None,
    }
    lines = [f"{_model_id(a)} vs {_model_id(b)}"
             + (f" (relabeling {doc['relabeling']})" if mapping else ""),
             f"equivalent: {str(path is not None).lower()}",
             f"same skeleton and immoralities: {str(oracle).lower()}"]
    if path is not None:
        lines.append("reversals: " + (", ".join(f"{i}->{j}" for i, j in path) or "none"))
    if args.transfer:
        if path is None:
            raise IdentificationError("Markov equivalence", "the models are not Markov equivalent")
        theta = load_parameters(a, args.transfer)
        tr = transfer_parameters(a, theta, b, mapping)
        doc["domain_ok"] = tr.domain_ok
        doc["applied_reversals"] = [list(e) for e in tr.applied_reversals]
        if not tr.domain_ok:
            raise IdentificationError("transfer positivity", tr.witness)
        doc["parameters"] = tr.target_params.to_json()
        lines += ["transferred parameters:", _params_text(tr.target_params)]
    _emit(args, doc, "\n".join(lines))


def cmd_causal(args):
    model = load_model(args.model)
    rep = effect_ambiguity(model, load_tensor(args.tensor), args.cause, args.outcome, args.mode)
    doc = rep.to_json() | {"model": _model_id(model)}
    _emit(args, doc, rep.to_text())


def cmd_catalog(args):
    reports = catalog_report(args.seeds)
    _emit(args, {"seeds": args.seeds, "rows": [r.to_json() for r in reports]}, format_catalog(reports))


def cmd_oracle(args):
    model = load_model(args.model)
    res = multistart_fiber_search(
        model, load_tensor(args.tensor), args.starts, args.seed,
        residual_tol=args.residual_tol, cluster_tol=args.cluster_tol,
    )
    doc = {"model": _model_id(model), "seed": args.seed, "evidence": "multistart",
           "representatives_canonical": True} | res.to_json()
    verdict = "inconclusive (no convergent starts)" if res.inconclusive else \
        f"{res.clusters} clusters after canonicalization ({res.raw_clusters} before)"
    parts = [f"model {_model_id(model)}: {res.converged}/{res.starts} starts converged",
             verdict, "(empirical evidence: a multistart search cannot rule out further solutions)"]
    for k, c in enumerate(res.representatives, 1):
        parts += [f"cluster {k}:", _params_text(canonicalize(model, c))]
    _emit(args, doc, "\n".join(parts))


# --- parser -------------------------------------------------------------------

def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--format", choices=("text", "json"), default="text")
    arith = _Parser(add_help=False)
    arith.add_argument("--mode", choices=MODES, default=None,
                       help="arithmetic; default follows the input (rational iff all entries are p/q)")

    p = _Parser(prog="latentbn", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("dim", parents=[common], help="parameter-space dimension")
    s.add_argument("model")
    s.set_defaults(func=cmd_dim)

    s = sub.add_parser("simulate", parents=[common, arith], help="generic parameters and their tensor")
    s.add_argument("model")
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("identify", parents=[common, arith], help="recover the fiber of a tensor")
    s.add_argument("model")
    s.add_argument("tensor", help="tensor JSON path or - for stdin")
    s.set_defaults(func=cmd_identify)

    s = sub.add_parser("fiber", parents=[common, arith], help="fiber size and Jacobian rank")
    s.add_argument("model")
    s.add_argument("tensor", nargs="?", help="needed for models with a finite-fiber procedure")
    s.set_defaults(func=cmd_fiber)

    s = sub.add_parser("equiv", parents=[common], help="Markov equivalence and parameter transfer")
    s.add_argument("model_a")
    s.add_argument("model_b")
    s.add_argument("--transfer", metavar="PARAMS", help="parameter JSON for model_a")
    s.add_argument("--relabel", help="node renaming applied to model_a first, e.g. 1:2,2:1")
    s.set_defaults(func=cmd_equiv)

    s = sub.add_parser("causal", parents=[common, arith], help="causal effects across the fiber")
    s.add_argument("model")
    s.add_argument("tensor")
    s.add_argument("--from", dest="cause", type=int, required=True)
    s.add_argument("--to", dest="outcome", type=int, required=True)
    s.set_defaults(func=cmd_causal)

    s = sub.add_parser("catalog", parents=[common], help="the small binary model catalog")
    s.add_argument("--seeds", type=int, default=JACOBIAN_SEEDS)
    s.set_defaults(func=cmd_catalog)

    s = sub.add_parser("oracle", parents=[common], help="multistart fiber search")
    s.add_argument("model")
    s.add_argument("tensor")
    s.add_argument("--starts", type=int, default=500)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--residual-tol", type=float, default=RESIDUAL_TOL)
    s.add_argument("--cluster-tol", type=float, default=CLUSTER_TOL)
    s.set_defaults(func=cmd_oracle)
    return p


def run(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "starts", 1) < 1 or getattr(args, "seeds", 1) < 1:
            parser.error("--starts and --seeds must be positive")
    except SystemExit as exc:  # argparse exits on usage errors and --help
        return exc.code
    try:
        args.func(args)
    except UsageError as exc:
        print(f"latentbn: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except IdentificationError as exc:
        print(f"latentbn: precondition failed: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except ModelError as exc:
        print(f"latentbn: invalid input: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
