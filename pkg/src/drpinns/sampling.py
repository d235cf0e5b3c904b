"""Collocation point generation and residual-adaptive refreshing.

The initial interior set comes from Latin Hypercube Sampling.  Refresh
rounds draw parent points with probability proportional to their residual
(plus an epsilon floor), spawn children uniformly inside a ball whose
radius shrinks as r0 * exp(-round), remove the chosen parents and keep
everything else:

    D_next = D_current + children - distinct parents

Parents drawn twice spawn children once, which keeps the interior set free
of exact duplicates.  Boundary points are never resampled.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .exceptions import EmptyInputError, InvalidConfigError
from .validation import check_box

# children are clipped this fraction of the box width inside the faces,
# so refreshed interior points stay strictly interior
_CLIP_MARGIN = 1e-9


@dataclass
class CollocationSet:
    """Interior and boundary sample points plus the refresh-round counter."""

    interior: np.ndarray
    boundary: np.ndarray
    box: np.ndarray
    round: int = 0

    def __post_init__(self):
        self.box = check_box(self.box)
        d = self.box.shape[0]
        self.interior = np.asarray(self.interior, dtype=float).reshape(-1, d)
        self.boundary = np.asarray(self.boundary, dtype=float).reshape(-1, d)
        self.validate()

    def validate(self):
        lo, hi = self.box[:, 0], self.box[:, 1]
        if len(self.interior) < 1 or len(self.boundary) < 1:
            raise InvalidConfigError("need at least one interior and one boundary point")
        if self.round < 0:
            raise InvalidConfigError("round counter cannot be negative")
        if not (np.all(self.interior > lo) and np.all(self.interior < hi)):
            raise InvalidConfigError("interior points must lie strictly inside the box")
        inside = (self.boundary >= lo) & (self.boundary <= hi)
        on_face = (self.boundary == lo) | (self.boundary == hi)
        if not (np.all(inside) and np.all(on_face.any(axis=1))):
            raise InvalidConfigError("boundary points must lie on a box face")
        if len(np.unique(self.interior, axis=0)) != len(self.interior):
            raise InvalidConfigError("interior points must be distinct")

    def to_csv(self, path):
        meta = {"round": int(self.round), "box": self.box.tolist()}
        d = self.box.shape[0]
        cols = ",".join(f"x{k}" for k in range(d))
        with open(path, "w") as fh:
            fh.write(f"# {json.dumps(meta)}\n")
            fh.write(f"kind,{cols}\n")
            for row in self.interior:
                fh.write("interior," + ",".join(repr(float(v)) for v in row) + "\n")
            for row in self.boundary:
                fh.write("boundary," + ",".join(repr(float(v)) for v in row) + "\n")

    @classmethod
    def from_csv(cls, path):
        with open(path) as fh:
            meta = json.loads(fh.readline().lstrip("# ").strip())
            header = fh.readline()
            interior, boundary = [], []
            for line in fh:
                kind, *vals = line.strip().split(",")
                (interior if kind == "interior" else boundary).append(
                    [float(v) for v in vals]
                )
        del header
        return cls(np.array(interior), np.array(boundary),
                   np.array(meta["box"]), meta["round"])


@dataclass
class ResampleConfig:
    """Parent/child refresh parameters: M parents, n children each."""

    parent_count: int
    children_per_parent: int = 1
    base_radius: float = 0.1
    epsilon: float = 1e-6

    def __post_init__(self):
        if self.parent_count < 1 or self.children_per_parent < 1:
            raise InvalidConfigError("parent and child counts must be positive")
        if not (self.base_radius > 0 and np.isfinite(self.base_radius)):
            raise InvalidConfigError("base_radius must be positive")
        if not (self.epsilon > 0 and np.isfinite(self.epsilon)):
            raise InvalidConfigError("epsilon must be positive")


def latin_hypercube(n, box, seed):
    """n stratified points in the box: one per axis stratum, per axis."""
    box = check_box(box)
    if n < 1:
        raise InvalidConfigError("need at least one sample")
    rng = np.random.default_rng(int(seed) % 2**64)
    d = box.shape[0]
    offsets = rng.random((n, d))
    offsets[offsets == 0.0] = 0.5  # keeps samples off stratum edges
    pts = np.empty((n, d))
    for k in range(d):
        strata = rng.permutation(n)
        pts[:, k] = box[k, 0] + (box[k, 1] - box[k, 0]) * (strata + offsets[:, k]) / n
    return pts


def normal_cloud(n, box, seed):
    """n interior points from an axis-wise normal centred in the box."""
    box = check_box(box)
    rng = np.random.default_rng(int(seed) % 2**64)
    centre = box.mean(axis=1)
    widths = box[:, 1] - box[:, 0]
    pts = rng.normal(centre, widths / 4.0, size=(n, box.shape[0]))
    return np.clip(pts, box[:, 0] + _CLIP_MARGIN * widths,
                   box[:, 1] - _CLIP_MARGIN * widths)


def sample_boundary(n, box, seed):
    """n points on the box faces, faces weighted by their area.

    In one dimension the two endpoints simply alternate.
    """
    box = check_box(box)
    d = box.shape[0]
    if n < 1:
        raise InvalidConfigError("need at least one sample")
    if d == 1:
        pts = np.empty((n, 1))
        pts[0::2, 0] = box[0, 0]
        pts[1::2, 0] = box[0, 1]
        return pts
    rng = np.random.default_rng(int(seed) % 2**64)
    widths = box[:, 1] - box[:, 0]
    face_area = np.repeat([np.prod(widths) / widths[k] for k in range(d)], 2)
    face = rng.choice(2 * d, size=n, p=face_area / face_area.sum())
    pts = box[:, 0] + rng.random((n, d)) * widths
    axis, side = face // 2, face % 2
    pts[np.arange(n), axis] = np.where(side == 0, box[axis, 0], box[axis, 1])
    return pts


def sampling_probabilities(residuals, epsilon=1e-6):
    """Selection probabilities (r_i + eps) / sum_j (r_j + eps).

    Negative residuals are clamped to zero first; the epsilon floor keeps
    every point selectable even when all residuals vanish.
    """
    r = np.asarray(residuals, dtype=float).reshape(-1)
    if r.size == 0:
        raise EmptyInputError("residual list is empty")
    if not (epsilon > 0):
        raise InvalidConfigError("epsilon must be positive")
    w = np.maximum(r, 0.0) + epsilon
    return w / w.sum()


def resample(cset, residuals, cfg, rng_seed):
    """One refresh round; returns a new CollocationSet with round + 1."""
    n_f = len(cset.interior)
    res = np.asarray(residuals, dtype=float).reshape(-1)
    if res.shape[0] != n_f:
        raise InvalidConfigError(
            f"got {res.shape[0]} residuals for {n_f} interior points"
        )
    if cfg.parent_count > n_f:
        raise InvalidConfigError("parent_count exceeds the interior point count")

    rng = np.random.default_rng(int(rng_seed) % 2**64)
    probs = sampling_probabilities(res, cfg.epsilon)
    drawn = rng.choice(n_f, size=cfg.parent_count, replace=True, p=probs)
    parents = np.unique(drawn)

    d = cset.box.shape[0]
    radius = cfg.base_radius * np.exp(-float(cset.round))
    k = len(parents) * cfg.children_per_parent
    centres = cset.interior[np.repeat(parents, cfg.children_per_parent)]
    dirs = rng.standard_normal((k, d))
    norms = np.linalg.norm(dirs, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    dirs /= norms
    radii = radius * rng.random(k) ** (1.0 / d)
    children = centres + radii[:, None] * dirs

    widths = cset.box[:, 1] - cset.box[:, 0]
    lo = cset.box[:, 0] + _CLIP_MARGIN * widths
    hi = cset.box[:, 1] - _CLIP_MARGIN * widths
    children = np.clip(children, lo, hi)

    interior = np.vstack([np.delete(cset.interior, parents, axis=0), children])
    interior = _jitter_duplicates(interior, widths, lo, hi, rng)
    return CollocationSet(interior, cset.boundary, cset.box, cset.round + 1)


def _jitter_duplicates(pts, widths, lo, hi, rng):
    # exact coordinate collisions only happen when the refresh radius has
    # decayed to the float floor; nudge repeats rather than dropping them
    for _ in range(100):
        _, first = np.unique(pts, axis=0, return_index=True)
        dup = np.setdiff1d(np.arange(len(pts)), first)
        if dup.size == 0:
            return pts
        pts = pts.copy()
        pts[dup] += rng.uniform(-1.0, 1.0, size=(dup.size, pts.shape[1])) * widths * 1e-9
        pts[dup] = np.clip(pts[dup], lo, hi)
    raise InvalidConfigError("could not de-duplicate refreshed interior points")
