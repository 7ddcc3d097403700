"""``fracstable`` command line.

Exit codes: 0 success, 2 invalid input (bad spec, bad arguments, ill-defined
process), 3 inconclusive numerical verdict.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import registry
from .classify import ClassifierConfig, classify_cfsm, uniqueness_search
from .errors import DivergentIntegralError, DomainError, FracStableError, SpecError
from .flows import (
    CyclicFlow,
    canonical_triple,
    generation_residual,
    random_samples,
    verify_cocycle,
    verify_flow_identity,
    verify_semi_additive_1,
    verify_semi_additive_2,
)
from .integrability import cq_norm, lalpha_increment_norm, sufficient_conditions
from .kernel import dump_spec, load_spec
from .oracle import char_exponent, self_similarity_residual
from .quadrature import QuadratureConfig
from .simulate import SimulationGrid, simulate_paths

EXIT_OK, EXIT_INVALID, EXIT_INCONCLUSIVE = 0, 2, 3


class _Inconclusive(Exception):
    def __init__(self, payload):
        self.payload = payload


def parse_times(text: str) -> list[float]:
    """``a:step:b`` (inclusive) or a comma list."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise DomainError(f"bad time range {text!r}; use start:step:stop")
        a, h, b = map(float, parts)
        if not h > 0 or b < a:
            raise DomainError("time range needs step > 0 and stop >= start")
        n = int(math.floor((b - a) / h + 1e-9))
        return [round(a + i * h, 12) for i in range(n + 1)]
    return [float(x) for x in text.split(",") if x.strip()]


def _pairs(text: str, width: int) -> list[tuple[float, ...]]:
    out = []
    for item in text.split(","):
        vals = tuple(float(x) for x in item.split(":"))
        if len(vals) != width:
            raise DomainError(f"expected {width} ':'-separated numbers in {item!r}")
        out.append(vals)
    return out


def _emit(obj, out: str | None) -> None:
    text = json.dumps(obj, indent=2, default=_json_default)
    if out:
        Path(out).write_text(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, float) and not math.isfinite(o):
        return None
    raise TypeError(f"cannot serialise {type(o).__name__}")


def _clean(obj):
    """Replace non-finite floats by None so the output is strict JSON."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    if isinstance(obj, (np.integer, np.bool_)):
        return obj.item()
    return obj


def _cfg(args) -> QuadratureConfig:
    return QuadratureConfig(rel_tol=args.rel_tol) if args.rel_tol else QuadratureConfig()


# ---------------------------------------------------------------------------
# subcommands


def cmd_registry(args):
    if args.list:
        return {name: e.summary for name, e in registry.REGISTRY.items()}
    if not args.name:
        raise DomainError("--name is required unless --list is given")
    kw = {}
    for p in args.param or []:
        if "=" not in p:
            raise DomainError(f"--param expects key=value, got {p!r}")
        k, v = p.split("=", 1)
        kw[k] = float(v)
    if args.name == "cosine":
        if args.lambda_atoms:
            kw["lambda_atoms"] = _pairs(args.lambda_atoms, 2)
        if args.n_atoms:
            kw["n_atoms"] = args.n_atoms
    if args.name == "mixed-lfsm" and args.lfsm_atoms:
        kw["atoms"] = _pairs(args.lfsm_atoms, 3)
    try:
        spec = registry.build(args.name, args.alpha, args.H, **kw)
    except TypeError as exc:
        raise DomainError(f"bad builder parameter: {exc}") from None
    text = dump_spec(spec)
    if args.out:
        Path(args.out).write_text(text + "\n")
        return None
    sys.stdout.write(text + "\n")
    return None


def cmd_check(args):
    spec = load_spec(args.spec)
    norm = cq_norm(spec, _cfg(args))
    report = {
        "label": spec.label,
        "kappa": spec.kappa,
        "well_defined": None if norm.status == "inconclusive" else norm.finite,
        "cq_norm": norm.to_dict(),
        "sufficient_conditions": [sufficient_conditions(a, spec.params).to_dict() for a in spec.atoms],
    }
    if norm.status == "inconclusive":
        raise _Inconclusive(report)
    return report


def cmd_norm(args):
    spec = load_spec(args.spec)
    cfg = _cfg(args)
    out = {"label": spec.label, "sigma": {}}
    inconclusive = False
    for t in parse_times(args.t):
        r = lalpha_increment_norm(spec, t, cfg)
        out["sigma"][repr(t)] = r.to_dict()
        inconclusive |= r.status == "inconclusive"
    if args.cq:
        r = cq_norm(spec, cfg)
        out["cq_norm"] = r.to_dict()
        inconclusive |= r.status == "inconclusive"
    if inconclusive:
        raise _Inconclusive(out)
    return out


def _theta(args, n):
    th = [float(x) for x in args.theta.split(",")]
    if len(th) != n:
        raise DomainError("--theta needs one value per time")
    return th


def cmd_charfn(args):
    spec = load_spec(args.spec)
    t = parse_times(args.t)
    rep = char_exponent(spec, t, _theta(args, len(t)), _cfg(args), form=args.form)
    out = rep.to_dict()
    if not rep.converged:
        raise _Inconclusive(out)
    return out


def cmd_selfsim(args):
    spec = load_spec(args.spec)
    t = parse_times(args.t)
    rep = self_similarity_residual(spec, args.a, t, _theta(args, len(t)), _cfg(args))
    out = rep.to_dict()
    if not rep.converged:
        raise _Inconclusive(out)
    return out


def cmd_classify(args):
    spec = load_spec(args.spec)
    rep = classify_cfsm(spec, ClassifierConfig())
    out = {"verdict": rep.overall, **rep.to_dict()}
    if rep.overall == "INCONCLUSIVE":
        raise _Inconclusive(out)
    return out


def cmd_unique(args):
    a, b = load_spec(args.spec_a), load_spec(args.spec_b)
    rep = uniqueness_search(a, b, ClassifierConfig())
    out = rep.to_dict()
    if rep.verdict == "inconclusive":
        raise _Inconclusive(out)
    return out


def cmd_verify_flow(args):
    spec = load_spec(args.spec)
    flow = CyclicFlow.from_spec(spec)
    triple = canonical_triple(spec)
    rng = np.random.default_rng(args.seed)
    atoms = []
    for i in range(flow.n_atoms):
        S = random_samples(flow, i, args.samples, rng)
        atoms.append(
            {
                "atom": i,
                "flow_identity": verify_flow_identity(flow, S, i),
                "cocycle": verify_cocycle(triple, S, i),
                "semi_additive_1": verify_semi_additive_1(triple, S, i),
                "semi_additive_2": verify_semi_additive_2(triple, spec.params, S, i),
            }
        )
    gen = generation_residual(spec, [0.5, 2.0, math.e], rng=rng)
    worst = max([gen] + [max(v for k, v in a.items() if k != "atom") for a in atoms])
    return {"label": spec.label, "samples": args.samples, "seed": args.seed, "atoms": atoms, "generation": gen, "max_residual": worst}


def cmd_simulate(args):
    spec = load_spec(args.spec)
    grid = SimulationGrid(tuple(parse_times(args.t)), seed=args.seed, v_cells=args.v_cells, ratio=args.ratio)
    ens = simulate_paths(spec, grid, args.reps, threads=args.threads)
    if args.out:
        with open(args.out, "w") as fh:
            ens.to_csv(fh)
    else:
        ens.to_csv(sys.stdout)
    return None


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="random seed (64-bit)")
    common.add_argument("--threads", type=int, default=1, help="worker threads for simulation")
    common.add_argument("--rel-tol", type=float, default=None, help="relative quadrature tolerance")
    common.add_argument("--out", default=None, help="output file (default stdout)")

    p = argparse.ArgumentParser(prog="fracstable", description="Periodic fractional stable motions")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("registry", parents=[common], help="write a registry kernel spec")
    s.add_argument("--name", choices=sorted(registry.REGISTRY))
    s.add_argument("--alpha", type=float, default=registry.DEFAULT_ALPHA)
    s.add_argument("--H", type=float, default=registry.DEFAULT_H)
    s.add_argument("--param", action="append", help="builder parameter key=value (repeatable)")
    s.add_argument("--lambda-atoms", help="cosine: z:weight,z:weight,...")
    s.add_argument("--n-atoms", type=int, help="cosine: Gauss-Legendre lambda on [1, 3]")
    s.add_argument("--lfsm-atoms", help="mixed-lfsm: weight:F1:F2,...")
    s.add_argument("--list", action="store_true", help="list registry kernels")
    s.set_defaults(func=cmd_registry)

    s = sub.add_parser("check", parents=[common], help="well-definedness report")
    s.add_argument("--spec", required=True)
    s.set_defaults(func=cmd_check)

    s = sub.add_parser("norm", parents=[common], help="scale sigma(t) and optionally the C^q norm")
    s.add_argument("--spec", required=True)
    s.add_argument("--t", default="1")
    s.add_argument("--cq", action="store_true")
    s.set_defaults(func=cmd_norm)

    s = sub.add_parser("charfn", parents=[common], help="joint characteristic exponent")
    s.add_argument("--spec", required=True)
    s.add_argument("--t", required=True)
    s.add_argument("--theta", required=True)
    s.add_argument("--form", default="V", choices=["V", "W", "Winv", "Shift", "ShiftInv"])
    s.set_defaults(func=cmd_charfn)

    s = sub.add_parser("selfsim", parents=[common], help="self-similarity residual")
    s.add_argument("--spec", required=True)
    s.add_argument("--a", type=float, required=True)
    s.add_argument("--t", default="1")
    s.add_argument("--theta", default="1")
    s.set_defaults(func=cmd_selfsim)

    s = sub.add_parser("classify", parents=[common], help="CYCLIC / FIXED verdicts")
    s.add_argument("--spec", required=True)
    s.set_defaults(func=cmd_classify)

    s = sub.add_parser("unique", parents=[common], help="essential-identity search")
    s.add_argument("--spec-a", required=True)
    s.add_argument("--spec-b", required=True)
    s.set_defaults(func=cmd_unique)

    s = sub.add_parser("verify-flow", parents=[common], help="flow, cocycle and generation residuals")
    s.add_argument("--spec", required=True)
    s.add_argument("--samples", type=int, default=10_000)
    s.set_defaults(func=cmd_verify_flow)

    s = sub.add_parser("simulate", parents=[common], help="Monte Carlo paths as CSV")
    s.add_argument("--spec", required=True)
    s.add_argument("--t", required=True, help="start:step:stop or a comma list")
    s.add_argument("--reps", type=int, default=1000)
    s.add_argument("--v-cells", type=int, default=8)
    s.add_argument("--ratio", type=float, default=1.4)
    s.set_defaults(func=cmd_simulate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        result = args.func(args)
    except _Inconclusive as exc:
        _emit(_clean(exc.payload), args.out)
        return EXIT_INCONCLUSIVE
    except SpecError as exc:
        print(f"fracstable: invalid spec: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (DomainError, DivergentIntegralError, FracStableError, ValueError) as exc:
        print(f"fracstable: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"fracstable: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if result is not None:
        _emit(_clean(result), args.out)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
