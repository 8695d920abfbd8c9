"""Monte Carlo estimators over configuration space.

Hit-or-miss sub-level volumes, thin-shell structure integrals, the
curvature integrand whose microcanonical average is the inverse
configurational temperature, and chart-neighborhood volumes.

All sampling is counter-based: batch b of a run with seed s draws from
an independent Philox stream keyed by (s, b), so estimates are exact
functions of (seed, n_samples) and independent of the worker count.
Two runs with the same seed see the same points (common random
numbers), which makes volume estimates exactly monotone in v.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BoxTooSmallError,
    HTooSmallError,
    NearCriticalError,
    OverlapDetectedError,
    ZeroVolumeError,
)
from .neckgeom import alpha_beta
from .rng import BATCH_SIZE, batch_plan, default_worker_count, substream


@dataclass
class VolumeEstimate:
    mean: float
    stderr: float
    n_samples: int
    seed: int
    kind: str  # hit_or_miss | thin_shell | analytic
    h: float | None = None
    bias_estimate: float | None = None

    def to_json(self):
        out = {
            "mean": self.mean,
            "stderr": self.stderr,
            "n": self.n_samples,
            "seed": self.seed,
            "estimator": self.kind,
        }
        if self.h is not None:
            out["h"] = self.h
        if self.bias_estimate is not None:
            out["bias_estimate"] = self.bias_estimate
        return out


@dataclass
class SamplerConfig:
    n_samples: int = 100_000
    seed: int = 0
    worker_count: int | None = None
    shell_halfwidth: float | None = None
    box: np.ndarray | None = None
    grad_floor: float = 1e-8
    batch_size: int = BATCH_SIZE
    check_box: bool = True
    boundary_shell: float = 1e-3  # fraction of each extent flagged as boundary

    def resolved_box(self, model):
        box = model.domain_box if self.box is None else np.asarray(self.box, dtype=float)
        if box.shape != (model.N, 2):
            raise ValueError("box must have shape (N, 2)")
        return box


@dataclass
class BetaEstimate:
    mean: float
    stderr: float
    n_inside: int
    n_rejected: int
    seed: int

    @property
    def rejected_fraction(self):
        tot = self.n_inside + self.n_rejected
        return self.n_rejected / tot if tot else 0.0

    def to_json(self):
        return {
            "mean": self.mean,
            "stderr": self.stderr,
            "n_inside": self.n_inside,
            "n_rejected": self.n_rejected,
            "rejected_fraction": self.rejected_fraction,
            "seed": self.seed,
        }


def _map_batches(config, fn):
    plan = list(batch_plan(config.n_samples, config.batch_size))
    workers = config.worker_count or default_worker_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, plan))
    return [fn(p) for p in plan]


def _box_volume(box):
    return float(np.prod(box[:, 1] - box[:, 0]))


def estimate_sublevel_volume(model, v, config=None):
    """Hit-or-miss estimate of vol{q : V(q) <= v}.

    Raises BoxTooSmallError when sub-level samples land on the outer
    boundary shell of a non-periodic box (the box then fails to bound
    the sub-level set). Returns a zero estimate when v is below the
    reachable minimum.
    """
    config = config or SamplerConfig()
    box = config.resolved_box(model)
    lo, hi = box[:, 0], box[:, 1]
    shell = config.boundary_shell * (hi - lo)
    check = config.check_box and not model.periodic

    def run(args):
        b, count = args
        Q = substream(config.seed, b).uniform(lo, hi, size=(count, model.N))
        inside = model.value_many(Q) <= v
        n_edge = 0
        if check and inside.any():
            edge = np.any((Q <= lo + shell) | (Q >= hi - shell), axis=1)
            n_edge = int(np.count_nonzero(inside & edge))
        return int(np.count_nonzero(inside)), n_edge

    results = _map_batches(config, run)
    hits = sum(r[0] for r in results)
    edge_hits = sum(r[1] for r in results)
    if edge_hits:
        raise BoxTooSmallError(
            f"{edge_hits} sub-level samples on the box boundary shell; enlarge the box"
        )
    return _binomial_estimate(hits, config.n_samples, _box_volume(box), config.seed)


def _binomial_estimate(hits, n, scale, seed, kind="hit_or_miss", **kw):
    p = hits / n
    return VolumeEstimate(
        mean=scale * p,
        stderr=scale * float(np.sqrt(p * (1.0 - p) / n)),
        n_samples=n,
        seed=seed,
        kind=kind,
        **kw,
    )


def analytic_volume(model, v):
    """Closed-form sub-level volume as a zero-error estimate."""
    vol = model.analytic_sublevel_volume(v)
    if vol is None:
        raise ValueError(f"model kind {model.kind!r} has no analytic volume")
    return VolumeEstimate(mean=vol, stderr=0.0, n_samples=0, seed=0, kind="analytic")


def estimate_structure_integral(model, v, config=None):
    """Thin-shell estimate of the level-surface integral of 1/|grad V|.

    Omega(v) ~ [M(v+h) - M(v-h)] / (2h) on common random numbers, which
    reduces to counting the shell v-h < V <= v+h. A half-width shell is
    counted from the same samples for a Richardson bias estimate.
    """
    config = config or SamplerConfig()
    box = config.resolved_box(model)
    lo, hi = box[:, 0], box[:, 1]
    h = config.shell_halfwidth
    if h is None:
        vmin = model.min_value
        if vmin is None or v <= vmin:
            raise ValueError("shell_halfwidth required when min_value is unknown")
        h = 1e-2 * (v - vmin)

    def run(args):
        b, count = args
        Q = substream(config.seed, b).uniform(lo, hi, size=(count, model.N))
        val = model.value_many(Q)
        m_full = int(np.count_nonzero((val > v - h) & (val <= v + h)))
        m_half = int(np.count_nonzero((val > v - h / 2) & (val <= v + h / 2)))
        return m_full, m_half

    results = _map_batches(config, run)
    m_full = sum(r[0] for r in results)
    m_half = sum(r[1] for r in results)
    if m_full == 0:
        raise HTooSmallError(f"no samples in the shell of halfwidth {h:.3e} at v = {v}")
    boxvol = _box_volume(box)
    est = _binomial_estimate(m_full, config.n_samples, boxvol / (2 * h), config.seed, kind="thin_shell", h=h)
    omega_half = boxvol * (m_half / config.n_samples) / h
    # leading shell bias is O(h^2): extrapolate from the halved shell
    est.bias_estimate = abs(est.mean - omega_half) * 4.0 / 3.0
    return est


# ---------------------------------------------------------------------------
# curvature integrand and the configurational inverse temperature
# ---------------------------------------------------------------------------


def federer_integrand(model, q, grad_floor=1e-8):
    """div(grad V / |grad V|^2) at a single point.

    Expanded form: lap V / |grad V|^2 - 2 g.H.g / |grad V|^4. Singular
    at critical points by construction; a gradient floor guards it.
    """
    q = np.asarray(q, dtype=float)
    g = np.asarray(model.gradient(q), dtype=float)
    gn2 = float(g @ g)
    if gn2 <= grad_floor * grad_floor:
        raise NearCriticalError(f"|grad| <= {grad_floor:.1e} at {q}")
    H = np.asarray(model.hessian(q), dtype=float)
    return float(np.trace(H) / gn2 - 2.0 * (g @ H @ g) / (gn2 * gn2))


def _federer_many(model, Q, grad_floor):
    """(values, ok_mask) for a batch; near-critical points are masked out."""
    G = model.gradient_many(Q)
    gn2 = np.einsum("ij,ij->i", G, G)
    ok = gn2 > grad_floor * grad_floor
    H = model.hessian_many(Q)
    lap = np.trace(H, axis1=1, axis2=2)
    quad_form = np.einsum("ij,ijk,ik->i", G, H, G)
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = lap / gn2 - 2.0 * quad_form / (gn2 * gn2)
    return vals, ok


def estimate_beta(model, v, config=None):
    """Microcanonical average of the curvature integrand over M_v.

    Equals Omega(v)/M(v) = d log M / dv; the inverse configurational
    temperature at level v. Near-critical samples (gradient below the
    floor) are rejected and counted.
    """
    config = config or SamplerConfig()
    box = config.resolved_box(model)
    lo, hi = box[:, 0], box[:, 1]

    def run(args):
        b, count = args
        Q = substream(config.seed, b).uniform(lo, hi, size=(count, model.N))
        Q = Q[model.value_many(Q) <= v]
        if len(Q) == 0:
            return 0.0, 0.0, 0, 0
        vals, ok = _federer_many(model, Q, config.grad_floor)
        good = vals[ok]
        return float(good.sum()), float((good * good).sum()), int(ok.sum()), int(len(Q) - ok.sum())

    results = _map_batches(config, run)
    s1 = sum(r[0] for r in results)
    s2 = sum(r[1] for r in results)
    n_in = sum(r[2] for r in results)
    n_rej = sum(r[3] for r in results)
    if n_in == 0:
        raise ZeroVolumeError(f"no sub-level samples below v = {v}")
    mean = s1 / n_in
    var = max(s2 / n_in - mean * mean, 0.0)
    return BetaEstimate(
        mean=mean,
        stderr=float(np.sqrt(var / n_in)),
        n_inside=n_in,
        n_rejected=n_rej,
        seed=config.seed,
    )


# ---------------------------------------------------------------------------
# chart-neighborhood volumes
# ---------------------------------------------------------------------------


class CylinderFrame:
    """Morse chart of one critical point: eigenbasis, scalings, membership.

    Membership and sampling are expressed through x_l = sqrt(|lam_l|/2) y_l
    with y the eigenbasis displacement, in which the second-order
    potential is v_c - |X|^2 + |Y|^2 and the neighborhood is
    {|X||Y| <= r, |xi| <= eps0}.
    """

    def __init__(self, model, point):
        self.point = point
        self.center = np.asarray(point.coords, dtype=float)
        H = np.asarray(model.hessian(self.center), dtype=float)
        lam, E = np.linalg.eigh(0.5 * (H + H.T))
        if np.abs(lam).min() == 0.0:
            raise ValueError("cylinder frame undefined at a degenerate point")
        self.lam = lam
        self.E = E
        self.neg = lam < 0
        self.scale = np.sqrt(np.abs(lam) / 2.0)  # y -> x
        self.J = float(2.0 ** (model.N / 2.0) / np.sqrt(np.prod(np.abs(lam))))
        self.periodic = model.periodic

    def morse_coords(self, Q):
        D = np.asarray(Q, dtype=float) - self.center
        if self.periodic:
            D = (D + np.pi) % (2.0 * np.pi) - np.pi
        return (D @ self.E) * self.scale

    def membership(self, Q, eps0, r):
        x = self.morse_coords(Q)
        x2 = x * x
        X2 = x2[:, self.neg].sum(axis=1)
        Y2 = x2[:, ~self.neg].sum(axis=1)
        xi = Y2 - X2
        return (X2 * Y2 <= r * r) & (np.abs(xi) <= eps0)

    def to_configuration(self, x):
        return self.center + (x / self.scale) @ self.E.T


def estimate_pseudocylinder_volume(model, point, v, eps0, r, config=None):
    """MC volume of M_v intersected with the chart neighborhood of a point.

    Samples the Morse-coordinate bounding box, keeps points inside the
    walls and caps, maps back through the eigenbasis (volume factor J),
    and tests the true potential against v.
    """
    config = config or SamplerConfig()
    frame = CylinderFrame(model, point)
    N = model.N
    R = alpha_beta(eps0, r)[1]  # max |coordinate| over the neighborhood

    def run(args):
        b, count = args
        x = substream(config.seed, b).uniform(-R, R, size=(count, N))
        x2 = x * x
        X2 = x2[:, frame.neg].sum(axis=1)
        Y2 = x2[:, ~frame.neg].sum(axis=1)
        xi = Y2 - X2
        in_gamma = (X2 * Y2 <= r * r) & (np.abs(xi) <= eps0)
        if not in_gamma.any():
            return 0
        Q = frame.to_configuration(x[in_gamma])
        return int(np.count_nonzero(model.value_many(Q) <= v))

    hits = sum(_map_batches(config, run))
    scale = frame.J * (2.0 * R) ** N
    return _binomial_estimate(hits, config.n_samples, scale, config.seed)


def estimate_excised_volume(model, points, v, eps0, r, config=None):
    """Hit-or-miss volume of M_v minus the union of chart neighborhoods."""
    config = config or SamplerConfig()
    box = config.resolved_box(model)
    lo, hi = box[:, 0], box[:, 1]
    frames = [CylinderFrame(model, p) for p in points]

    def run(args):
        b, count = args
        Q = substream(config.seed, b).uniform(lo, hi, size=(count, model.N))
        keep = model.value_many(Q) <= v
        for frame in frames:
            if not keep.any():
                break
            keep &= ~frame.membership(Q, eps0, r)
        return int(np.count_nonzero(keep))

    hits = sum(_map_batches(config, run))
    return _binomial_estimate(hits, config.n_samples, _box_volume(box), config.seed)


def detect_cylinder_overlap(model, points, eps0, r, n_probe=4000, seed=0, raise_on_overlap=False):
    """Probe each neighborhood's interior for membership in any other.

    Returns the list of overlapping pairs (i, j); optionally raises.
    """
    frames = [CylinderFrame(model, p) for p in points]
    R = alpha_beta(eps0, r)[1]
    pairs = []
    for i, frame in enumerate(frames):
        gen = substream(seed, i)
        x = gen.uniform(-R, R, size=(n_probe, model.N))
        x2 = x * x
        X2 = x2[:, frame.neg].sum(axis=1)
        Y2 = x2[:, ~frame.neg].sum(axis=1)
        xi = Y2 - X2
        inside = (X2 * Y2 <= r * r) & (np.abs(xi) <= eps0)
        if not inside.any():
            continue
        Q = frame.to_configuration(x[inside])
        for j, other in enumerate(frames):
            if j == i:
                continue
            if other.membership(Q, eps0, r).any():
                pairs.append((min(i, j), max(i, j)))
    pairs = sorted(set(pairs))
    if pairs and raise_on_overlap:
        raise OverlapDetectedError(f"overlapping neighborhood pairs: {pairs}")
    return pairs


def estimate_row(model, v, estimate):
    """Persistable JSON row for one volume estimate."""
    row = {"model_hash": model.spec_hash(), "v": v}
    row.update(estimate.to_json())
    return row
