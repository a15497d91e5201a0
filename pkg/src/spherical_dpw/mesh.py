"""Text mesh export with the binary degeneracy colouring.

Mesh file (OBJ-like, 1-based indices)::

    # comment lines
    v x y z r g b
    f i j k

Sidecar: the same path with suffix ``.csv``, one row per written vertex with
columns ``vertex,ix,iy,u,v,mu,margin,K``.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import InputError
from .surface import Frontal, curvature_field

COLOR_POS = (0.85, 0.33, 0.10)
COLOR_NEG = (0.00, 0.45, 0.74)
COLOR_PLAIN = (0.70, 0.70, 0.70)


def render_mu(fr: Frontal) -> np.ndarray:
    """<f_x x f_y, N> with one-sided differences at the boundary (rendering only)."""
    fx = np.gradient(fr.f, fr.spec.hx, axis=0)
    fy = np.gradient(fr.f, fr.spec.hy, axis=1)
    return np.einsum("...k,...k->...", np.cross(fx, fy), fr.N)


def _fmt(v: float) -> str:
    return "nan" if not np.isfinite(v) else f"{v:.12g}"


def triangulate(f: np.ndarray, present: np.ndarray) -> list[tuple]:
    """Grid triangles as (i, j) index triples; quads split along the shorter diagonal.

    Triangles touching an absent vertex are dropped.
    """
    tris = []
    nx, ny = present.shape
    for i in range(nx - 1):
        for j in range(ny - 1):
            a, b, c, d = (i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)
            have = [present[p] for p in (a, b, c, d)]
            if all(have):
                if np.linalg.norm(f[a] - f[c]) <= np.linalg.norm(f[b] - f[d]):
                    tris += [(a, b, c), (a, c, d)]
                else:
                    tris += [(a, b, d), (b, c, d)]
            elif sum(have) == 3:
                tris.append(tuple(p for p, h in zip((a, b, c, d), have) if h))
    return tris


def export_mesh(fr: Frontal, path, color_field: str = "mu", sidecar: bool = True) -> dict:
    """Write the mesh (and sidecar table); returns vertex and face counts."""
    path = Path(path)
    present = fr.mask & np.all(np.isfinite(fr.f), axis=-1)
    mu_render = render_mu(fr)
    mu = fr.mu
    K, _ = curvature_field(fr)
    index = -np.ones(present.shape, dtype=int)
    order = np.argwhere(present)
    index[present] = np.arange(1, len(order) + 1) if len(order) else []
    # argwhere is row-major, matching the boolean assignment order above
    lines = [f"# spherical-dpw mesh: {fr.kind} frontal, {fr.spec.nx}x{fr.spec.ny} grid",
             f"# color_field {color_field}"]
    for i, j in order:
        x, y, z = fr.f[i, j]
        if color_field == "mu":
            m = mu_render[i, j]
            col = COLOR_POS if not np.isfinite(m) or m >= 0 else COLOR_NEG
        else:
            col = COLOR_PLAIN
        lines.append("v " + " ".join(_fmt(v) for v in (x, y, z, *col)))
    tris = triangulate(fr.f, present)
    for t in tris:
        lines.append("f " + " ".join(str(index[p]) for p in t))
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join(lines) + "\n")
        if sidecar:
            xs, ys = fr.spec.x, fr.spec.y
            rows = ["vertex,ix,iy,u,v,mu,margin,K"]
            for n, (i, j) in enumerate(order, 1):
                rows.append(",".join([str(n), str(i), str(j), _fmt(xs[i]), _fmt(ys[j]),
                                      _fmt(mu[i, j]), _fmt(fr.margin[i, j]), _fmt(K[i, j])]))
            path.with_suffix(".csv").write_text("\n".join(rows) + "\n")
    except OSError as exc:
        raise InputError(f"cannot write mesh to {path}: {exc}") from exc
    return {"vertices": int(len(order)), "faces": len(tris), "path": str(path)}
