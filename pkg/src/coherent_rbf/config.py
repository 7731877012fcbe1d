"""Run and convergence configuration files.

The format is INI (``configparser``), one flat key/value list per section::

    [system]      name, a, iterates, t0, tf, rk4_steps, times
    [domain]      kind, extent
    [grid]        counts, delta_centers, delta_collocation
    [rbf]         kernel, eps, formulation, cond_warn
    [eig]         count, tol, method, use_transpose_adjoint, symmetrize_D
    [cheeger]     levels, image_option, resolution, eigenvectors, refine_threshold
    [output]      directory, files
    [convergence] axis, kernels, counts, eps, eps_values, reference,
                  reference_source, fit_error_floor, exclude

Numeric values accept ``pi`` and simple arithmetic (``2*pi``, ``pi/2``);
lists are comma separated.  Every problem in a file is collected and reported
together in one :class:`~coherent_rbf.errors.ConfigError`.
"""
import ast
import configparser
import math
import operator
from dataclasses import asdict, dataclass, field

from .dynamics import SYSTEMS
from .errors import ConfigError
from .kernels import KERNELS

OUTPUT_FILES = ("spectrum", "eigvec", "contours", "cheeger", "summary")
PAPER_STD_MAP_REFERENCE = (6e-5, -1.15, -1.17, -2.10)

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_NAMES = {"pi": math.pi, "e": math.e}


def parse_number(text):
    """Evaluate a numeric literal or a small arithmetic expression in ``pi``."""
    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id in _NAMES:
            return _NAMES[node.id]
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.Call) and getattr(node.func, "id", None) == "sqrt" and len(node.args) == 1:
            return math.sqrt(ev(node.args[0]))
        raise ValueError(f"not a number: {text!r}")
    try:
        return ev(ast.parse(text.strip(), mode="eval"))
    except (SyntaxError, ZeroDivisionError) as exc:
        raise ValueError(f"not a number: {text!r}") from exc


def _split(text):
    return [t.strip() for t in text.split(",") if t.strip()]


@dataclass
class SystemConfig:
    name: str = "standard_map"
    a: float = 0.971635
    iterates: int = 2
    t0: float = 0.0
    tf: float = 40.0
    rk4_steps: int = None
    times: list = None

    def params(self):
        if self.name == "standard_map":
            return {"a": self.a, "iterates": self.iterates}
        return {"t0": self.t0, "tf": self.tf, "rk4_steps": self.rk4_steps}


@dataclass
class DomainConfig:
    kind: str = "torus"
    extent: list = None


@dataclass
class GridConfig:
    counts: list = field(default_factory=lambda: [20, 20])
    delta_centers: float = 0.0
    delta_collocation: float = 0.0


@dataclass
class RBFConfig:
    kernel: str = "psi64"
    eps: float = 0.4
    formulation: str = "fixed-domain"
    cond_warn: float = 1e14


@dataclass
class EigConfig:
    count: int = 4
    tol: float = 1e-8
    method: str = "auto"
    use_transpose_adjoint: bool = True
    symmetrize_D: bool = False


@dataclass
class CheegerConfig:
    levels: int = 100
    image_option: str = "b"
    resolution: int = 100
    eigenvectors: list = field(default_factory=lambda: [2])
    refine_threshold: float = None


@dataclass
class OutputConfig:
    directory: str = "output"
    files: list = field(default_factory=lambda: list(OUTPUT_FILES))


@dataclass
class ConvergenceConfig:
    axis: str = "mesh"
    kernels: list = field(default_factory=lambda: ["psi31", "psi42", "psi53", "psi64"])
    counts: list = field(default_factory=lambda: [14, 16, 18, 20, 22, 24, 26, 28, 30])
    eps: float = 0.8
    eps_values: list = field(default_factory=list)
    reference: list = field(default_factory=lambda: list(PAPER_STD_MAP_REFERENCE))
    reference_source: str = "published standard-map eigenvalues"
    fit_error_floor: float = 0.05
    exclude: list = field(default_factory=list)


@dataclass
class RunConfig:
    system: SystemConfig = field(default_factory=SystemConfig)
    domain: DomainConfig = field(default_factory=DomainConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    rbf: RBFConfig = field(default_factory=RBFConfig)
    eig: EigConfig = field(default_factory=EigConfig)
    cheeger: CheegerConfig = field(default_factory=CheegerConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    convergence: ConvergenceConfig = field(default_factory=ConvergenceConfig)
    source_text: str = ""
    source_path: str = None
    overrides: dict = field(default_factory=dict)

    def to_dict(self):
        d = asdict(self)
        for k in ("source_text", "source_path", "overrides"):
            d.pop(k)
        return d


# key -> (parser, attribute)
def _int(v):
    x = parse_number(v)
    if x != int(x):
        raise ValueError(f"not an integer: {v!r}")
    return int(x)


def _bool(v):
    s = v.strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _opt(parse):
    return lambda v: None if v.strip().lower() in ("", "none") else parse(v)


_str = str.strip
_nums = lambda v: [parse_number(t) for t in _split(v)]
_ints = lambda v: [_int(t) for t in _split(v)]
_strs = _split

SCHEMA = {
    "system": {"name": _str, "a": parse_number, "iterates": _int, "t0": parse_number,
               "tf": parse_number, "rk4_steps": _opt(_int), "times": _opt(_nums)},
    "domain": {"kind": _str, "extent": _opt(_nums)},
    "grid": {"counts": _ints, "delta_centers": parse_number, "delta_collocation": parse_number},
    "rbf": {"kernel": _str, "eps": parse_number, "formulation": _str, "cond_warn": parse_number},
    "eig": {"count": _int, "tol": parse_number, "method": _str,
            "use_transpose_adjoint": _bool, "symmetrize_d": _bool},
    "cheeger": {"levels": _int, "image_option": _str, "resolution": _int,
                "eigenvectors": _ints, "refine_threshold": _opt(parse_number)},
    "output": {"directory": _str, "files": _strs},
    "convergence": {"axis": _str, "kernels": _strs, "counts": _ints, "eps": parse_number,
                    "eps_values": _nums, "reference": _nums, "reference_source": _str,
                    "fit_error_floor": parse_number, "exclude": _nums},
}
_ATTR = {"symmetrize_d": "symmetrize_D"}


def _apply(cfg, section, key, raw, violations):
    parse = SCHEMA[section].get(key)
    if parse is None:
        violations.append(f"[{section}] unknown key {key!r}")
        return
    try:
        value = parse(raw)
    except ValueError as exc:
        violations.append(f"[{section}] {key}: {exc}")
        return
    setattr(getattr(cfg, section), _ATTR.get(key, key), value)


def parse_config(text, source_path=None, overrides=None):
    """Parse and validate config text; raises ConfigError listing all violations."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError([f"syntax: {exc}"]) from None
    cfg = RunConfig(source_text=text, source_path=source_path)
    violations = []
    for section in cp.sections():
        if section not in SCHEMA:
            violations.append(f"unknown section [{section}]")
            continue
        for key, raw in cp.items(section):
            _apply(cfg, section, key, raw, violations)
    for dotted, raw in (overrides or {}).items():
        section, key = dotted.split(".", 1)
        _apply(cfg, section, key, str(raw), violations)
        cfg.overrides[dotted] = raw
    violations += validate(cfg)
    if violations:
        raise ConfigError(violations)
    return cfg


def load_config(path, overrides=None):
    with open(path) as fh:
        text = fh.read()
    return parse_config(text, str(path), overrides)


def validate(cfg):
    """List of human-readable problems (empty when the config is usable)."""
    v = []
    s, d, g, r, e, c, o, cv = (cfg.system, cfg.domain, cfg.grid, cfg.rbf, cfg.eig, cfg.cheeger,
                               cfg.output, cfg.convergence)
    if s.name not in SYSTEMS:
        v.append(f"system.name {s.name!r} not one of {sorted(SYSTEMS)}")
    expected = {"standard_map": "torus", "cylinder_flow": "cylinder"}.get(s.name)
    if expected and d.kind != expected:
        v.append(f"domain.kind {d.kind!r} does not match system {s.name!r} (expects {expected!r})")
    if d.kind not in ("torus", "cylinder", "box"):
        v.append(f"domain.kind {d.kind!r} not one of torus, cylinder, box")
    if d.extent is not None and (len(d.extent) != 4 or not (d.extent[1] > d.extent[0] and d.extent[3] > d.extent[2])):
        v.append("domain.extent must be x0, x1, y0, y1 with x1 > x0 and y1 > y0")
    if s.iterates < 1:
        v.append("system.iterates must be >= 1")
    if s.name == "cylinder_flow" and not s.tf != s.t0:
        v.append("system.tf must differ from system.t0")
    if s.rk4_steps is not None and s.rk4_steps < 1:
        v.append("system.rk4_steps must be >= 1")
    if s.times is not None:
        t0, tf = (0, s.iterates) if s.name == "standard_map" else (s.t0, s.tf)
        if len(s.times) < 2 or s.times[0] != t0 or s.times[-1] != tf:
            v.append(f"system.times must start at {t0:g} and end at {tf:g}")
        elif any(b <= a for a, b in zip(s.times, s.times[1:])):
            v.append("system.times must be strictly increasing")
        elif s.name == "standard_map" and any(t != int(t) for t in s.times):
            v.append("system.times must be integers (iterate counts) for discrete maps")
    if len(g.counts) != 2 or min(g.counts, default=0) < 2:
        v.append("grid.counts must be two integers >= 2")
    if g.delta_centers < 0 or g.delta_collocation < 0:
        v.append("grid deltas must be non-negative")
    if r.kernel not in KERNELS:
        v.append(f"rbf.kernel {r.kernel!r} not one of {sorted(KERNELS)}")
    if not r.eps > 0:
        v.append("rbf.eps must be positive")
    if r.formulation not in ("fixed-domain", "moving-domain"):
        v.append("rbf.formulation must be fixed-domain or moving-domain")
    elif r.formulation == "moving-domain" and d.kind != "torus":
        v.append("rbf.formulation moving-domain needs a boundaryless (torus) domain")
    if r.formulation == "moving-domain" and s.times is not None and len(s.times) > 2:
        v.append("rbf.formulation moving-domain supports a single time interval")
    if e.count < 1:
        v.append(f"eig.count must be >= 1 (got {e.count})")
    if not e.tol > 0:
        v.append("eig.tol must be positive")
    if e.method not in ("auto", "dense", "arnoldi"):
        v.append("eig.method must be auto, dense or arnoldi")
    if c.levels < 1:
        v.append("cheeger.levels must be >= 1")
    if c.image_option not in ("a", "b"):
        v.append("cheeger.image_option must be a or b")
    if c.resolution < 8:
        v.append("cheeger.resolution must be >= 8")
    if any(k < 2 or k > e.count for k in c.eigenvectors):
        v.append(f"cheeger.eigenvectors must lie in 2..eig.count ({e.count})")
    if c.refine_threshold is not None and not c.refine_threshold > 0:
        v.append("cheeger.refine_threshold must be positive")
    bad = [f for f in o.files if f not in OUTPUT_FILES]
    if bad:
        v.append(f"output.files has unknown entries {bad}; allowed {list(OUTPUT_FILES)}")
    if not o.directory:
        v.append("output.directory must be set")
    if cv.axis not in ("mesh", "shape"):
        v.append("convergence.axis must be mesh or shape")
    if any(k not in KERNELS for k in cv.kernels):
        v.append(f"convergence.kernels must be drawn from {sorted(KERNELS)}")
    npts = len(cv.counts) if cv.axis == "mesh" else len(cv.eps_values)
    if npts < 3:
        v.append(f"convergence needs >= 3 sweep points (got {npts})")
    if any(n < 2 for n in cv.counts):
        v.append("convergence.counts must be >= 2")
    if any(not x > 0 for x in cv.eps_values) or not cv.eps > 0:
        v.append("convergence eps values must be positive")
    if len(cv.reference) < 1:
        v.append("convergence.reference must list at least one eigenvalue")
    if cv.fit_error_floor < 0:
        v.append("convergence.fit_error_floor must be >= 0")
    return v
