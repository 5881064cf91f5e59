"""Command line entry point ``tltr-bench``.

Subcommands: ``run``, ``compare``, ``sweep``, ``gen-synthetic``. Options may
also come from a flat ``key = value`` file given with ``--config``; keys are
the long option names, and options on the command line take precedence.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from . import harness
from .data import save_libsvm, synthetic_classification
from .solvers import TrConfig


def _ints(text):
    return [int(t) for t in text.split(",") if t.strip()]


def _floats(text):
    return [float(t) for t in text.split(",") if t.strip()]


def _add_problem_args(p):
    p.add_argument("--loss", choices=sorted(harness.LOSSES), default="logistic")
    p.add_argument("--data", help="LIBSVM file; omitted means the synthetic instance")
    p.add_argument("--features", type=int, help="override the feature count")
    p.add_argument("--lambda", dest="lam", type=float,
                   help="regularization weight (default 1/N)")
    p.add_argument("--synthetic-seed", type=int, default=harness.SYNTHETIC_DEFAULTS["seed"])
    p.add_argument("--synthetic-samples", type=int,
                   default=harness.SYNTHETIC_DEFAULTS["n_samples"])
    p.add_argument("--synthetic-features", type=int,
                   default=harness.SYNTHETIC_DEFAULTS["n_features"])
    p.add_argument("--fine", choices=["cp", "stcg"], default="stcg")
    p.add_argument("--stcg-cap", type=int, default=2)
    ell = p.add_mutually_exclusive_group()
    ell.add_argument("--ell", type=int)
    ell.add_argument("--ell-frac", type=float)
    p.add_argument("--sketch", choices=["gaussian", "shash", "coordinate"],
                   default="gaussian")
    s = p.add_mutually_exclusive_group()
    s.add_argument("--s", type=int)
    s.add_argument("--s-frac", type=float)
    p.add_argument("--no-subspace", action="store_true",
                   help="TLTR with the subspace step switched off")
    p.add_argument("--seeds", type=_ints, default=[0])
    p.add_argument("--grad-tol", type=float, default=1e-7)
    p.add_argument("--max-iter", type=int, default=1000)
    p.add_argument("--delta0", type=float, default=1.0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out")


def build_parser():
    parser = argparse.ArgumentParser(prog="tltr-bench", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="flat key = value option file")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one solver over the given seeds")
    _add_problem_args(p)
    p.add_argument("--solver", choices=harness.SOLVERS, default="tltr")

    p = sub.add_parser("compare", help="run several solvers on one problem")
    _add_problem_args(p)
    p.add_argument("--solvers", default="tr,tltr",
                   help="comma list; 'tltr-nosub' switches the subspace off")

    p = sub.add_parser("sweep", help="vary one parameter")
    _add_problem_args(p)
    p.add_argument("--solver", choices=harness.SOLVERS, default="tltr")
    p.add_argument("--param", required=True,
                   choices=["ell", "ell-frac", "s", "s-frac", "stcg-cap"])
    p.add_argument("--values", required=True, type=_floats)

    p = sub.add_parser("gen-synthetic", help="write the synthetic dataset as LIBSVM")
    p.add_argument("--samples", type=int, default=harness.SYNTHETIC_DEFAULTS["n_samples"])
    p.add_argument("--features", type=int, default=harness.SYNTHETIC_DEFAULTS["n_features"])
    p.add_argument("--seed", type=int, default=harness.SYNTHETIC_DEFAULTS["seed"])
    p.add_argument("--noise", type=float, default=harness.SYNTHETIC_DEFAULTS["noise"])
    p.add_argument("--scale-decay", type=float,
                   default=harness.SYNTHETIC_DEFAULTS["scale_decay"])
    p.add_argument("--density", type=float, default=1.0)
    p.add_argument("--out", required=True)
    return parser


def read_config(path) -> list[str]:
    """Turn ``key = value`` lines into ``--key value`` arguments."""
    args = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise harness.ConfigError(f"{path}:{lineno}: expected key = value")
            key = key.strip().replace("_", "-")
            value = value.strip()
            if value.lower() in ("true", "yes", "on"):
                args.append(f"--{key}")
            elif value.lower() in ("false", "no", "off"):
                continue
            else:
                args += [f"--{key}", value]
    return args


def spec_from_args(a, solver=None) -> harness.ExperimentSpec:
    synthetic = dict(harness.SYNTHETIC_DEFAULTS)
    synthetic.update(seed=a.synthetic_seed, n_samples=a.synthetic_samples,
                     n_features=a.synthetic_features)
    solver = solver or a.solver
    subspace = not a.no_subspace
    if solver == "tltr-nosub":
        solver, subspace = "tltr", False
    tr = TrConfig(delta0=a.delta0, grad_tol=a.grad_tol, max_iter=a.max_iter,
                  fine_solver=a.fine, stcg_cap=a.stcg_cap)
    return harness.ExperimentSpec(
        loss=a.loss, data=a.data, synthetic=synthetic, lam=a.lam, n_features=a.features,
        solver=solver, tr=tr, ell=a.ell, ell_frac=a.ell_frac, sketch=a.sketch, s=a.s,
        s_frac=a.s_frac, subspace=subspace, seeds=a.seeds, out=a.out)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, rest = pre.parse_known_args(argv)
    try:
        if known.config:
            file_args = read_config(known.config)
            # file options go right after the subcommand so the command line wins
            cmd = next((i for i, t in enumerate(rest) if not t.startswith("-")), None)
            if cmd is None:
                parser.error("missing subcommand")
            rest = rest[:cmd + 1] + file_args + rest[cmd + 1:]
        a = parser.parse_args(rest)
        return _dispatch(a)
    except (harness.ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _dispatch(a) -> int:
    if a.command == "gen-synthetic":
        d = synthetic_classification(a.samples, a.features, seed=a.seed, noise=a.noise,
                                     scale_decay=a.scale_decay, density=a.density)
        save_libsvm(d, a.out)
        print(f"wrote {d.n_samples} samples x {d.n_features} features to {a.out}")
        return 0

    if a.command == "run":
        summary = harness.run(spec_from_args(a), jobs=a.jobs)
        sys.stdout.write(summary.to_text())
        return 0

    if a.command == "compare":
        names = [s.strip() for s in a.solvers.split(",") if s.strip()]
        specs = []
        for name in names:
            if name not in (*harness.SOLVERS, "tltr-nosub"):
                raise harness.ConfigError(f"unknown solver {name!r}")
            spec = spec_from_args(a, solver=name)
            spec = dataclasses.replace(spec, label=spec.name())
            if a.out:
                spec = dataclasses.replace(spec, out=f"{a.out}/{spec.label}")
            specs.append(spec)
        table = harness.compare(specs, jobs=a.jobs)
        text = table.format()
        sys.stdout.write(text)
        if a.out:
            with open(f"{a.out}/comparison.txt", "w") as fh:
                fh.write(text)
        return 0

    # sweep
    param = a.param.replace("-", "_")
    values = [int(v) if param in ("ell", "s", "stcg_cap") else v for v in a.values]
    rows = harness.sweep(spec_from_args(a), param, values, jobs=a.jobs)
    for row in rows:
        print(row.format())
    return 0


if __name__ == "__main__":
    sys.exit(main())
