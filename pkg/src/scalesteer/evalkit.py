"""Detection scoring and a multiscale LoG baseline.

Detections are matched to ground truth by a minimum-distance assignment in
which pairs farther apart than the gate are forbidden. Jaccard and RMSE follow
from the matched pairs.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import permutations

import numpy as np
from scipy import ndimage
from scipy.optimize import linear_sum_assignment

from .detector import Detection, _greedy_nms, suppress_across_scales

__all__ = [
    "MatchResult",
    "match",
    "brute_force_match",
    "jaccard",
    "rmse",
    "log_baseline",
    "default_log_sigmas",
    "EvalRow",
    "evaluate",
    "rows_to_csv",
    "summarize",
    "svg_line_plot",
    "DEFAULT_GATE",
]

DEFAULT_GATE = 5.0
_FORBIDDEN = 1e12


def _xy(points):
    """(K, 2) array of (x, y) from detections, disks or an array."""
    if isinstance(points, np.ndarray):
        return points.reshape(-1, 2).astype(float)
    pts = list(points)
    if not pts:
        return np.zeros((0, 2))
    if hasattr(pts[0], "x"):
        return np.array([(p.x, p.y) for p in pts], dtype=float)
    return np.asarray(pts, dtype=float).reshape(-1, 2)


@dataclass(frozen=True)
class MatchResult:
    """Gated one-to-one assignment between detections and truths.

    ``pairs`` holds ``(det_index, truth_index, distance)`` sorted by det index.
    """

    pairs: tuple
    false_positives: tuple
    false_negatives: tuple
    gate: float = DEFAULT_GATE
    n_dets: int = field(default=0, repr=False)
    n_truths: int = field(default=0, repr=False)

    @property
    def n_tp(self) -> int:
        return len(self.pairs)

    @property
    def n_fp(self) -> int:
        return len(self.false_positives)

    @property
    def n_fn(self) -> int:
        return len(self.false_negatives)

    @property
    def total_distance(self) -> float:
        return float(sum(p[2] for p in self.pairs))


def _distance_matrix(d, t):
    return np.hypot(d[:, None, 0] - t[None, :, 0], d[:, None, 1] - t[None, :, 1])


def match(dets, truths, gate: float = DEFAULT_GATE) -> MatchResult:
    """Hungarian matching on centre distance with pairs beyond ``gate`` forbidden.

    Among assignments with the most matched pairs, the total distance is
    minimal. Forbidden entries carry a cost larger than any feasible total,
    so the solver never trades a valid pair for a shorter one.
    """
    d, t = _xy(dets), _xy(truths)
    if not (np.all(np.isfinite(d)) and np.all(np.isfinite(t))):
        raise ValueError("coordinates must be finite")
    pairs = []
    if len(d) and len(t):
        D = _distance_matrix(d, t)
        C = np.where(D <= gate, D, _FORBIDDEN)
        rows, cols = linear_sum_assignment(C)
        pairs = sorted((int(i), int(j), float(D[i, j])) for i, j in zip(rows, cols) if D[i, j] <= gate)
    used_d = {p[0] for p in pairs}
    used_t = {p[1] for p in pairs}
    return MatchResult(tuple(pairs), tuple(i for i in range(len(d)) if i not in used_d),
                       tuple(j for j in range(len(t)) if j not in used_t), float(gate), len(d), len(t))


def brute_force_match(dets, truths, gate: float = DEFAULT_GATE):
    """``(n_matched, total_distance)`` of the best assignment by enumeration.

    Exponential; meant as an oracle for small sets.
    """
    d, t = _xy(dets), _xy(truths)
    if len(d) > len(t):
        d, t = t, d
    if len(d) == 0:
        return 0, 0.0
    D = _distance_matrix(d, t)
    dist = D[np.arange(len(d)), _permutations(len(t), len(d))]
    ok = dist <= gate
    count = ok.sum(axis=1)
    total = np.where(ok, dist, 0.0).sum(axis=1)
    best = count == count.max()
    return int(count.max()), float(total[best].min())


@lru_cache(maxsize=64)
def _permutations(m: int, n: int) -> np.ndarray:
    # every ordered choice of n of m items, one per row
    return np.array(list(permutations(range(m), n)), dtype=np.intp).reshape(-1, n)


def jaccard(m: MatchResult) -> float:
    """TP / (TP + FP + FN); 1.0 when there is nothing to detect and nothing detected."""
    denom = m.n_tp + m.n_fp + m.n_fn
    return 1.0 if denom == 0 else m.n_tp / denom


def _radius(p):
    return float(p.radius) if hasattr(p, "radius") else float(p[2])


def rmse(m: MatchResult, dets, truths):
    """Position and radius RMSE over matched pairs; ``(None, None)`` without matches."""
    if m.n_tp == 0:
        return None, None
    d, t = _xy(dets), _xy(truths)
    dets, truths = list(dets), list(truths)
    pos = np.array([np.sum((d[i] - t[j]) ** 2) for i, j, _ in m.pairs])
    rad = np.array([(_radius(dets[i]) - _radius(truths[j])) ** 2 for i, j, _ in m.pairs])
    return float(np.sqrt(pos.mean())), float(np.sqrt(rad.mean()))


# ---------------------------------------------------------------------------
# LoG baseline


def default_log_sigmas(r_min: float = 8.0, r_max: float = 40.0, n: int = 16):
    """Geometric sigma list covering radii ``[r_min, r_max]`` with ``r = sqrt(2) sigma``."""
    return tuple(np.geomspace(r_min, r_max, n) / np.sqrt(2.0))


def log_baseline(image, sigmas=None, threshold: float = 0.1, nms_radius: int = 5,
                 max_detections: int | None = None) -> list[Detection]:
    """Multiscale Laplacian-of-Gaussian blob detector.

    Scale-normalized responses ``-sigma^2 LoG * f`` are computed with periodic
    boundaries. A candidate is a local maximum over (sigma, y, x) whose value
    reaches ``threshold`` times the maximum of its own sigma slice; the same
    square-window suppression as the main detector is then applied within and
    across scales. Radius is ``sqrt(2) sigma``.
    """
    img = np.asarray(image, dtype=float)
    sig = np.asarray(default_log_sigmas() if sigmas is None else sigmas, dtype=float)
    if sig.ndim != 1 or sig.size == 0 or np.any(sig <= 0):
        raise ValueError("sigmas must be a non-empty list of positive values")
    L = np.stack([-s * s * ndimage.gaussian_laplace(img, s, mode="wrap") for s in sig])
    R = int(nms_radius)
    peak = ndimage.maximum_filter(L, size=(3, 2 * R + 1, 2 * R + 1), mode=("nearest", "wrap", "wrap"))
    dets = []
    for k, s in enumerate(sig):
        Lk = L[k]
        top = Lk.max()
        if top <= 0:
            continue
        mask = (Lk == peak[k]) & (Lk > 0) & (Lk >= threshold * top)
        rows, cols = np.nonzero(mask)
        vals = Lk[rows, cols]
        order = np.lexsort((cols, rows, -vals))
        for i in _greedy_nms(order, rows, cols, R, img.shape):
            v = float(vals[i])
            dets.append(Detection(float(cols[i]), float(rows[i]), float(np.sqrt(2.0) * s), v, k,
                                  float(np.log2(s)), v))
    dets = suppress_across_scales(dets, R, img.shape)
    dets.sort(key=lambda d: (-d.score, d.y, d.x))
    if max_detections is not None:
        dets = dets[:max_detections]
    return dets


# ---------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class EvalRow:
    image: str
    method: str
    jaccard: float
    rmse_pos: float | None
    rmse_radius: float | None
    n_tp: int
    n_fp: int
    n_fn: int
    wall_ms: float | None
    bg_std: float | None = None

    FIELDS = ("image", "method", "jaccard", "rmse_pos", "rmse_radius", "n_tp", "n_fp", "n_fn", "wall_ms")


def evaluate(dets, truths, image: str = "", method: str = "", wall_ms: float | None = None,
             gate: float = DEFAULT_GATE, bg_std=None) -> EvalRow:
    """One report row; ``wall_ms`` None leaves the timing column empty."""
    m = match(dets, truths, gate)
    p, r = rmse(m, dets, truths)
    ms = None if wall_ms is None else float(wall_ms)
    return EvalRow(image, method, jaccard(m), p, r, m.n_tp, m.n_fp, m.n_fn, ms, bg_std)


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def rows_to_csv(rows, extra=()) -> str:
    """CSV text with the report columns, plus ``extra`` attribute columns."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    cols = list(EvalRow.FIELDS) + list(extra)
    w.writerow(cols)
    for row in rows:
        w.writerow([_fmt(getattr(row, c)) for c in cols])
    return buf.getvalue()


def summarize(rows, by="bg_std") -> dict:
    """Mean metrics per (method, group); missing RMSE values are skipped."""
    groups = {}
    for row in rows:
        groups.setdefault((row.method, getattr(row, by)), []).append(row)
    out = []
    for (method, g), rs in sorted(groups.items(), key=lambda kv: (kv[0][0], -np.inf if kv[0][1] is None else kv[0][1])):
        pos = [r.rmse_pos for r in rs if r.rmse_pos is not None]
        rad = [r.rmse_radius for r in rs if r.rmse_radius is not None]
        out.append({
            "method": method, by: g, "n_images": len(rs),
            "jaccard": float(np.mean([r.jaccard for r in rs])),
            "rmse_pos": float(np.mean(pos)) if pos else None,
            "rmse_radius": float(np.mean(rad)) if rad else None,
            "n_tp": int(sum(r.n_tp for r in rs)), "n_fp": int(sum(r.n_fp for r in rs)),
            "n_fn": int(sum(r.n_fn for r in rs)),
            "wall_ms": float(np.mean(ms)) if (ms := [r.wall_ms for r in rs if r.wall_ms is not None]) else None,
        })
    return {"groups": out}


def svg_line_plot(series: dict, xlabel: str = "", ylabel: str = "", title: str = "",
                  width: int = 480, height: int = 320) -> str:
    """Minimal SVG line chart; ``series`` maps a label to ``(xs, ys)``."""
    pad_l, pad_r, pad_t, pad_b = 56, 110, 30, 44
    xs = np.concatenate([np.asarray(v[0], float) for v in series.values()]) if series else np.zeros(1)
    ys = np.concatenate([np.asarray(v[1], float) for v in series.values()]) if series else np.zeros(1)
    ys = ys[np.isfinite(ys)] if np.any(np.isfinite(ys)) else np.zeros(1)
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = min(0.0, float(ys.min())), float(ys.max())
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    pw, ph = width - pad_l - pad_r, height - pad_t - pad_b

    def px(x):
        return pad_l + (x - x0) / (x1 - x0) * pw

    def py(y):
        return pad_t + ph - (y - y0) / (y1 - y0) * ph

    colors = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'font-family="sans-serif" font-size="11">',
           f'<rect x="{pad_l}" y="{pad_t}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>']
    for frac in np.linspace(0, 1, 5):
        xv, yv = x0 + frac * (x1 - x0), y0 + frac * (y1 - y0)
        out.append(f'<text x="{px(xv):.1f}" y="{pad_t + ph + 14}" text-anchor="middle">{xv:.3g}</text>')
        out.append(f'<text x="{pad_l - 6}" y="{py(yv) + 4:.1f}" text-anchor="end">{yv:.3g}</text>')
    for k, (label, (sx, sy)) in enumerate(series.items()):
        c = colors[k % len(colors)]
        pts = " ".join(f"{px(a):.1f},{py(b):.1f}" for a, b in zip(sx, sy) if np.isfinite(b))
        out.append(f'<polyline points="{pts}" fill="none" stroke="{c}" stroke-width="2"/>')
        ly = pad_t + 14 + 16 * k
        out.append(f'<line x1="{width - pad_r + 10}" y1="{ly - 4}" x2="{width - pad_r + 30}" '
                   f'y2="{ly - 4}" stroke="{c}" stroke-width="2"/>')
        out.append(f'<text x="{width - pad_r + 34}" y="{ly}">{_esc(label)}</text>')
    out.append(f'<text x="{pad_l + pw / 2}" y="{height - 8}" text-anchor="middle">{_esc(xlabel)}</text>')
    out.append(f'<text x="14" y="{pad_t + ph / 2}" text-anchor="middle" '
               f'transform="rotate(-90 14 {pad_t + ph / 2})">{_esc(ylabel)}</text>')
    if title:
        out.append(f'<text x="{pad_l + pw / 2}" y="18" text-anchor="middle">{_esc(title)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _esc(s) -> str:
    return str(s).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def summary_json(rows, by="bg_std") -> str:
    return json.dumps(summarize(rows, by), indent=2, sort_keys=True)
