"""End-to-end coherent-set computation driven by a :class:`RunConfig`.

Steps: build the system and the node sets, assemble the collocation matrix,
form the discrete Laplacian and transfer operators, solve for the leading
eigenpairs, sample eigenfunctions on the evaluation grid and scan level sets
of the chosen eigenvectors for the smallest dynamic Cheeger ratio.
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .coherent import evaluate_fields, scan_cheeger
from .collocation import (assemble, discrete_operator, image_setup, koopman_rows, laplacian_rows,
                          moving_domain_operators, transfer_rows)
from .config import RunConfig
from .domain import boundary_nodes, make_domain, regular_grid
from .dynamics import make_system
from .errors import CoherentRBFError, ConfigError
from .spectral import DynamicLaplacian, dynamic_laplacian, smallest_magnitude_eigs, symmetrize

log = logging.getLogger(__name__)


class StageError(CoherentRBFError):
    """A numerical failure, tagged with the pipeline stage it happened in."""

    def __init__(self, stage, cause):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class CoherentSetResult:
    config: RunConfig
    system: object
    setup: object
    operator: DynamicLaplacian
    spectrum: object
    transfer: list = field(default_factory=list)
    setup_image: object = None
    fields: dict = field(default_factory=dict)
    image_fields: dict = field(default_factory=dict)
    scans: dict = field(default_factory=dict)
    times: list = field(default_factory=list)

    @property
    def eigenvalues(self):
        return self.spectrum.eigenvalues

    def summary(self):
        lam = self.spectrum.eigenvalues
        out = {
            "version": __version__,
            "system": self.system.name,
            "formulation": self.operator.formulation,
            "times": [float(t) for t in self.times],
            "n_centers": int(self.setup.n),
            "n_interior": int(self.setup.n_interior),
            "n_boundary": int(len(self.setup.boundary)),
            "cond_estimate": float(self.setup.cond_estimate),
            "overlap_count": float(self.setup.overlap),
            "eigenvalues": [{"k": k + 1, "re": float(w.real), "im": float(w.imag),
                             "residual": float(r)}
                            for k, (w, r) in enumerate(zip(lam, self.spectrum.residuals))],
            "cheeger": {},
        }
        for k, scan in self.scans.items():
            b = scan.best
            bound = 2.0 * np.sqrt(max(-float(lam[k - 1].real), 0.0))
            lam2 = float(lam[1].real) if len(lam) > 1 else float("nan")
            out["cheeger"][f"f{k}"] = {
                "gamma_star": b.gamma,
                "h_star": b.ratio,
                "length_initial": b.length_initial,
                "length_final": b.length_final,
                "lengths": list(b.lengths),
                "volume_min": b.volume_min,
                "levels": len(scan.evaluations),
                "image_option": self.config.cheeger.image_option,
                "bound_2sqrt_neg_lambda_k": bound,
                "bound_2sqrt_neg_lambda2": 2.0 * np.sqrt(max(-lam2, 0.0)),
                "bound_holds": bool(b.ratio <= 2.0 * np.sqrt(max(-lam2, 0.0))),
            }
        out["config"] = {
            "text": self.config.source_text,
            "path": self.config.source_path,
            "overrides": {k: str(v) for k, v in self.config.overrides.items()},
            "resolved": self.config.to_dict(),
        }
        return out


def build_system(cfg):
    s = cfg.system
    system = make_system(s.name, **s.params())
    if cfg.domain.extent is not None:
        dom = make_domain(cfg.domain.kind, cfg.domain.extent)
        if dom != system.domain:
            raise ConfigError([f"domain.extent {cfg.domain.extent} differs from the fixed extent of "
                               f"{s.name} ({system.domain.lower}-{system.domain.upper})"])
    return system


def comparison_times(cfg, system):
    if cfg.system.times is not None:
        ts = list(cfg.system.times)
        return [int(t) for t in ts] if system.kind == "discrete-map" else ts
    return system.default_times()


def build_nodes(cfg, domain):
    """Centers ``Y`` (shift ``delta_centers``) and nodes ``X`` (shift ``delta_collocation``)."""
    g = cfg.grid
    centers = regular_grid(domain, g.counts, g.delta_centers)
    nodes = regular_grid(domain, g.counts, g.delta_collocation)
    interior, boundary = boundary_nodes(domain, nodes)
    return centers, interior, boundary


def _stage(name, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except ConfigError:
        raise
    except (CoherentRBFError, np.linalg.LinAlgError, FloatingPointError) as exc:
        raise StageError(name, exc) from exc


def build_operator(cfg, system, setup, times):
    """Dynamic Laplacian for the configured formulation; returns (operator, P list, image setup)."""
    D = discrete_operator(setup, laplacian_rows(setup))
    if cfg.eig.symmetrize_D:
        D = symmetrize(D)
    if cfg.rbf.formulation == "moving-domain":
        img = image_setup(setup, system, times[-1])
        D0, D_hat = moving_domain_operators(setup, img)
        if cfg.eig.symmetrize_D:
            D0, D_hat = symmetrize(D0), symmetrize(D_hat)
        M = 0.5 * (D0 + D_hat)
        return DynamicLaplacian(M, "moving-domain", tuple(times)), [], img
    P_list, adj = [], []
    for t in times[1:]:
        P_list.append(discrete_operator(setup, transfer_rows(setup, system, t)))
        if not cfg.eig.use_transpose_adjoint:
            adj.append(discrete_operator(setup, koopman_rows(setup, system, t)))
    form = "fixed-domain" if len(times) == 2 else "multi-time"
    op = dynamic_laplacian(D, P_list, times, adjoints=adj or None, formulation=form)
    return op, P_list, None


def run_pipeline(cfg):
    """Execute every stage for ``cfg``; numerical failures raise :class:`StageError`."""
    system = _stage("system", build_system, cfg)
    domain = system.domain
    times = comparison_times(cfg, system)
    centers, interior, boundary = build_nodes(cfg, domain)
    log.info("%s: %d centers, %d interior nodes, %d boundary nodes, times %s",
             system.name, len(centers), len(interior), len(boundary), times)
    setup = _stage("assembly", assemble, domain, system, centers, interior, boundary,
                   cfg.rbf.kernel, cfg.rbf.eps, times, cfg.rbf.cond_warn)
    op, P_list, img = _stage("operators", build_operator, cfg, system, setup, times)
    spec = _stage("eigensolve", smallest_magnitude_eigs, op, cfg.eig.count, cfg.eig.tol,
                  cfg.eig.method)
    res = CoherentSetResult(cfg, system, setup, op, spec, P_list, img, times=times)

    c = cfg.cheeger
    grids = _stage("evaluation", evaluate_fields, setup, spec.eigenvectors, c.resolution)
    res.fields = {k + 1: g for k, g in enumerate(grids)}
    for k in c.eigenvectors:
        f = spec.vector(k)
        kw = {}
        if c.image_option == "b":
            if img is not None:
                images = _stage("evaluation", evaluate_fields, img, f[:, None], c.resolution)
            else:
                images = _stage("evaluation", evaluate_fields, setup,
                                np.column_stack([P @ f for P in P_list]), c.resolution)
            res.image_fields[k] = images
            kw["image_grid"] = images
        else:
            kw["flow"] = system
            kw["t"] = list(times[1:])
        res.scans[k] = _stage("cheeger", scan_cheeger, res.fields[k], c.levels, c.image_option,
                              refine_threshold=c.refine_threshold, **kw)
    return res
