"""Command line driver: ``coherent-rbf run|converge|systems``.

Exit status: 0 on success, 2 for configuration errors, 3 for numerical
failures (the message names the failing stage).  ``COHERENT_RBF_LOG`` sets the
log level (DEBUG, INFO, WARNING; default WARNING).
"""
import argparse
import logging
import os
import sys

from . import __version__, _accel
from .config import load_config
from .errors import CoherentRBFError, ConfigError

LOG_ENV = "COHERENT_RBF_LOG"
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _setup_logging():
    level = os.environ.get(LOG_ENV, "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def build_parser():
    ap = argparse.ArgumentParser(prog="coherent-rbf",
                                 description="Finite-time coherent sets via RBF collocation "
                                             "of the dynamic Laplacian.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="eigenproblem + Cheeger scan for one configuration")
    run.add_argument("config")
    run.add_argument("--output-dir", help="overrides [output] directory")
    run.add_argument("--eig-count", type=int, help="overrides [eig] count")
    run.add_argument("--levels", type=int, help="overrides [cheeger] levels")
    run.add_argument("--image-option", choices=("a", "b"), help="overrides [cheeger] image_option")

    conv = sub.add_parser("converge", help="mesh-width or shape-parameter convergence study")
    conv.add_argument("config")
    conv.add_argument("--output-dir", help="overrides [output] directory")
    conv.add_argument("--eig-count", type=int, help="overrides [eig] count")

    sub.add_parser("systems", help="list the built-in dynamical systems")
    return ap


def _overrides(args):
    o = {}
    if getattr(args, "output_dir", None):
        o["output.directory"] = args.output_dir
    if getattr(args, "eig_count", None) is not None:
        o["eig.count"] = args.eig_count
    if getattr(args, "levels", None) is not None:
        o["cheeger.levels"] = args.levels
    if getattr(args, "image_option", None):
        o["cheeger.image_option"] = args.image_option
    return o


def cmd_run(args):
    from .io import write_run
    from .pipeline import run_pipeline

    cfg = load_config(args.config, _overrides(args))
    res = run_pipeline(cfg)
    paths = write_run(res, cfg.output.directory, cfg.output.files)
    lam = res.eigenvalues
    print("eigenvalues: " + ", ".join(f"{w.real:.6g}{w.imag:+.2g}j" for w in lam))
    for k, scan in res.scans.items():
        b = scan.best
        print(f"f{k}: gamma*={b.gamma:.6g} h*={b.ratio:.6g} len0={b.length_initial:.6g} "
              f"len1={b.length_final:.6g} vol_min={b.volume_min:.6g}")
    print(f"wrote {len(paths)} files to {cfg.output.directory}")
    return 0


def cmd_converge(args):
    from .convergence import run_convergence
    from .io import write_convergence, write_json

    cfg = load_config(args.config, _overrides(args))
    res = run_convergence(cfg)
    out = cfg.output.directory
    write_convergence(os.path.join(out, "convergence.csv"), res)
    fits = {k: {"slope": f.slope, "intercept": f.intercept, "used": f.used, "note": f.reason}
            for k, f in res.fits.items()}
    write_json(os.path.join(out, "convergence.json"),
               {"axis": res.axis, "reference": cfg.convergence.reference,
                "reference_source": cfg.convergence.reference_source,
                "fit_error_floor": cfg.convergence.fit_error_floor, "fits": fits,
                "config": {"text": cfg.source_text, "path": cfg.source_path}})
    print(f"{'kernel':8s} {'sweep':>10s} {'max_err':>12s}")
    for p in res.points:
        print(f"{p.kernel:8s} {p.sweep_value:10.5f} {p.max_err:12.4e}")
    for k, f in res.fits.items():
        print(f"{k}: " + (f"slope {f.slope:.3f} over {len(f.used)} points" if f.defined else f.reason))
    return 0


def cmd_systems(args):
    from .dynamics import SYSTEMS

    for name, desc in SYSTEMS.items():
        print(f"{name}: {desc}")
    return 0


def main(argv=None):
    _setup_logging()
    args = build_parser().parse_args(argv)
    logging.getLogger(__name__).info("backend: %s", _accel.backend())
    handler = {"run": cmd_run, "converge": cmd_converge, "systems": cmd_systems}[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print("configuration error:", file=sys.stderr)
        for v in exc.violations:
            print(f"  - {v}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CoherentRBFError as exc:
        stage = getattr(exc, "stage", None)
        where = f" in stage {stage!r}" if stage else ""
        print(f"numerical failure{where}: {getattr(exc, 'cause', exc)}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
