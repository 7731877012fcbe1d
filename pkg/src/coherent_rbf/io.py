"""CSV/JSON artifacts for external plotting.  All floats use 17 significant digits."""
import json
import os

import numpy as np

from .coherent import split_at_seams

FMT = "%.17g"


def _open(path):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    return open(path, "w", newline="")


def _fmt(x):
    return FMT % x


def write_spectrum(path, spectrum):
    with _open(path) as fh:
        fh.write("k,re_lambda,im_lambda,residual\n")
        for k, (w, r) in enumerate(zip(spectrum.eigenvalues, spectrum.residuals)):
            fh.write(f"{k + 1},{_fmt(w.real)},{_fmt(w.imag)},{_fmt(r)}\n")


def write_field(path, grid):
    """Grid samples, x-major (row index = x index), after a ``#`` metadata line."""
    d = grid.domain
    nx, ny = grid.shape
    with _open(path) as fh:
        fh.write(f"# nx={nx} ny={ny} x0={_fmt(d.lower[0])} x1={_fmt(d.upper[0])} "
                 f"y0={_fmt(d.lower[1])} y1={_fmt(d.upper[1])}\n")
        fh.write("x,y,value\n")
        for i, x in enumerate(grid.xs):
            for j, y in enumerate(grid.ys):
                fh.write(f"{_fmt(x)},{_fmt(y)},{_fmt(grid.values[i, j])}\n")


def write_contour(path, curve):
    """Polyline vertices; pieces are split where a segment crosses a periodic seam."""
    with _open(path) as fh:
        fh.write(f"# level={_fmt(curve.level)} length={_fmt(curve.total_length)}\n")
        fh.write("polyline,piece,closed,x,y\n")
        for i, poly in enumerate(curve.polylines):
            pieces = split_at_seams(curve.domain, poly)
            closed = int(poly.closed and len(pieces) == 1)
            for j, pts in enumerate(pieces):
                for x, y in pts:
                    fh.write(f"{i},{j},{closed},{_fmt(x)},{_fmt(y)}\n")


def write_cheeger(path, scan):
    with _open(path) as fh:
        fh.write("gamma,len0,len1,vol_min,ratio\n")
        for e in scan.evaluations:
            fh.write(",".join(_fmt(v) for v in (e.gamma, e.length_initial, e.length_final,
                                                 e.volume_min, e.ratio)) + "\n")


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else str(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path, data):
    with _open(path) as fh:
        json.dump(_json_safe(data), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_run(result, directory, files):
    """Write the artifacts selected by ``files``; returns the list of paths written."""
    out = []

    def p(name):
        path = os.path.join(directory, name)
        out.append(path)
        return path

    if "spectrum" in files:
        write_spectrum(p("spectrum.csv"), result.spectrum)
    if "eigvec" in files:
        for k, grid in result.fields.items():
            write_field(p(f"eigvec_{k}.csv"), grid)
        for k, grids in result.image_fields.items():
            write_field(p(f"image_field_{k}.csv"), grids[-1])
    first = True
    for k, scan in result.scans.items():
        sfx = "" if first else f"_f{k}"
        first = False
        if "contours" in files:
            write_contour(p(f"contour_initial{sfx}.csv"), scan.curve_initial)
            write_contour(p(f"contour_final{sfx}.csv"), scan.curve_final)
        if "cheeger" in files:
            write_cheeger(p(f"cheeger{sfx}.csv"), scan)
    if "summary" in files:
        write_json(p("summary.json"), result.summary())
    return out


def write_convergence(path, result):
    with _open(path) as fh:
        fh.write("kernel,sweep_value,max_err\n")
        for pt in result.points:
            fh.write(f"{pt.kernel},{_fmt(pt.sweep_value)},{_fmt(pt.max_err)}\n")
