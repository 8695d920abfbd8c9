"""Critical points of a potential: search, classification, catalog queries.

The finder runs multistart Newton on grad V = 0 (Newton converges to
saddles and extrema alike), deduplicates wrap-aware, classifies each
survivor through the symmetric eigendecomposition of the Hessian, and
derives the level structure: distinct critical values, per-level
counts, index multiplicities, Euler characteristics, and the minimum
level gap that sets the neighborhood thickness.

Completeness is probabilistic: the catalog reports how many starts fed
each point and never certifies global enumeration.
"""

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CutoffExceededError,
    NotCriticalError,
    SingleLevelError,
)
from .potentials import TiltedModel, model_from_spec
from .rng import batch_plan, default_worker_count, substream

TWO_PI = 2.0 * np.pi


def wrap_angles(q):
    """Map angular coordinates into [-pi, pi)."""
    return (np.asarray(q, dtype=float) + np.pi) % TWO_PI - np.pi


def displacement(a, b, periodic=False):
    """a - b, component-wise shortest when coordinates are angles."""
    d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    if periodic:
        d = (d + np.pi) % TWO_PI - np.pi
    return d


@dataclass
class CriticalPoint:
    coords: np.ndarray
    value: float
    morse_index: int
    hessian_eigenvalues: np.ndarray
    jacobian_factor: float
    degenerate: bool

    def to_json(self):
        return {
            "coords": self.coords.tolist(),
            "value": self.value,
            "index": self.morse_index,
            "eigenvalues": self.hessian_eigenvalues.tolist(),
            "J": self.jacobian_factor,
            "degenerate": self.degenerate,
        }

    @classmethod
    def from_json(cls, d):
        return cls(
            coords=np.asarray(d["coords"], dtype=float),
            value=float(d["value"]),
            morse_index=int(d["index"]),
            hessian_eigenvalues=np.asarray(d["eigenvalues"], dtype=float),
            jacobian_factor=float(d["J"]),
            degenerate=bool(d["degenerate"]),
        )


@dataclass
class SearchConfig:
    n_starts: int | None = None  # None: 200*N*3^min(N,5), capped at 1e6
    max_iter: int = 100
    tol_grad: float = 1e-10
    dedup_tol: float = 1e-6
    degeneracy_threshold: float = 1e-8
    value_group_tol: float = 1e-8
    seed: int = 0
    worker_count: int | None = None


@dataclass
class CriticalCatalog:
    N: int
    points: list = field(default_factory=list)  # sorted by (value, coords)
    critical_values: np.ndarray = field(default_factory=lambda: np.empty(0))
    level_counts: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=int))
    v_max: float = np.inf
    periodic: bool = False
    model_spec: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    seed: int = 0
    metadata: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.points)


def default_start_count(N):
    return int(min(200 * N * 3 ** min(N, 5), 1_000_000))


def classify_critical_point(model, coords, tol_grad=1e-10, degeneracy_threshold=1e-8):
    """Build a CriticalPoint at coords: index, eigenvalues, chart factor.

    The chart factor J = 2^{N/2} |det Hess|^{-1/2} is the volume
    Jacobian of the map taking the second-order expansion
    (1/2) sum lam_l y_l^2 to the normal form +-sum x_l^2 via
    x_l = sqrt(|lam_l|/2) y_l along the eigenbasis.
    """
    coords = np.asarray(coords, dtype=float)
    g = np.asarray(model.gradient(coords), dtype=float)
    gnorm = float(np.linalg.norm(g))
    if gnorm > tol_grad:
        raise NotCriticalError(f"|grad| = {gnorm:.3e} exceeds tol {tol_grad:.1e}")
    H = np.asarray(model.hessian(coords), dtype=float)
    lam = np.linalg.eigvalsh(0.5 * (H + H.T))
    absl = np.abs(lam)
    degenerate = bool(absl.min() < degeneracy_threshold * max(absl.max(), 1e-300))
    with np.errstate(divide="ignore", over="ignore"):
        J = float(2.0 ** (model.N / 2.0) / np.sqrt(np.prod(absl))) if absl.min() > 0 else np.inf
    return CriticalPoint(
        coords=coords,
        value=float(model.value(coords)),
        morse_index=int(np.count_nonzero(lam < 0)),
        hessian_eigenvalues=lam,
        jacobian_factor=J,
        degenerate=degenerate,
    )


def _newton_batch(model, Q0, max_iter, tol_grad, step_cap):
    """Run Newton on grad V = 0 for a batch of starts; return (points, ok)."""
    Q = np.array(Q0, dtype=float)
    M = len(Q)
    converged = np.zeros(M, dtype=bool)
    failed = np.zeros(M, dtype=bool)
    for _ in range(max_iter):
        act = np.flatnonzero(~(converged | failed))
        if act.size == 0:
            break
        g = model.gradient_many(Q[act])
        gn = np.linalg.norm(g, axis=1)
        bad = ~np.isfinite(gn)
        done = (gn <= tol_grad) & ~bad
        converged[act[done]] = True
        failed[act[bad]] = True
        run = ~(done | bad)
        if not run.any():
            continue
        ridx = act[run]
        H = model.hessian_many(Q[ridx])
        rhs = -g[run][..., None]
        try:
            step = np.linalg.solve(H, rhs)[..., 0]
        except np.linalg.LinAlgError:
            step = (np.linalg.pinv(H) @ rhs)[..., 0]
        sn = np.linalg.norm(step, axis=1)
        nonfin = ~np.isfinite(sn)
        if nonfin.any():
            failed[ridx[nonfin]] = True
            step[nonfin] = 0.0
            sn[nonfin] = 0.0
        big = sn > step_cap
        if big.any():
            step[big] *= (step_cap / sn[big])[:, None]
        Q[ridx] += step
    act = np.flatnonzero(~(converged | failed))
    if act.size:
        gn = np.linalg.norm(model.gradient_many(Q[act]), axis=1)
        converged[act[gn <= tol_grad]] = True
    return Q[converged], int(M - converged.sum())


def find_critical_points(model, v_max, config=None):
    """Multistart Newton search for all critical points with value <= v_max."""
    cfg = config or SearchConfig()
    n_starts = cfg.n_starts if cfg.n_starts else default_start_count(model.N)
    workers = cfg.worker_count or default_worker_count()
    box = model.domain_box
    lo, hi = box[:, 0], box[:, 1]
    step_cap = 2.0 * float(np.max(hi - lo))

    def run_batch(args):
        b, count = args
        starts = substream(cfg.seed, b).uniform(lo, hi, size=(count, model.N))
        return _newton_batch(model, starts, cfg.max_iter, cfg.tol_grad, step_cap)

    plan = list(batch_plan(n_starts))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_batch, plan))
    else:
        results = [run_batch(p) for p in plan]

    found = [r[0] for r in results if len(r[0])]
    n_failed = sum(r[1] for r in results)
    coords = np.concatenate(found) if found else np.empty((0, model.N))

    if model.periodic:
        coords = wrap_angles(coords)
    margin = 1e-9 * np.maximum(hi - lo, 1.0)
    inside = np.all((coords >= lo - margin) & (coords <= hi + margin), axis=1)
    n_outside = int(len(coords) - inside.sum())
    coords = coords[inside]

    reps, hits = _dedup(model, coords, cfg.dedup_tol)

    points, basin_hits, n_above = [], [], 0
    for rep, nhit in zip(reps, hits):
        cp = classify_critical_point(
            model, rep, tol_grad=10 * cfg.tol_grad, degeneracy_threshold=cfg.degeneracy_threshold
        )
        if cp.value <= v_max + 1e-12:
            points.append(cp)
            basin_hits.append(nhit)
        else:
            n_above += 1

    order = sorted(range(len(points)), key=lambda i: (points[i].value, tuple(points[i].coords)))
    points = [points[i] for i in order]
    basin_hits = [basin_hits[i] for i in order]

    values, counts = _group_levels([p.value for p in points], cfg.value_group_tol)
    return CriticalCatalog(
        N=model.N,
        points=points,
        critical_values=values,
        level_counts=counts,
        v_max=float(v_max),
        periodic=model.periodic,
        model_spec=model.spec(),
        tolerances={
            "tol_grad": cfg.tol_grad,
            "dedup_tol": cfg.dedup_tol,
            "degeneracy_threshold": cfg.degeneracy_threshold,
            "value_group_tol": cfg.value_group_tol,
        },
        seed=cfg.seed,
        metadata={
            "n_starts": int(n_starts),
            "n_converged": int(len(coords)),
            "n_no_converge": int(n_failed),
            "n_out_of_box": n_outside,
            "n_above_cutoff": n_above,
            "basin_hits": basin_hits,
            "min_basin_hits": int(min(basin_hits)) if basin_hits else 0,
        },
    )


def _dedup(model, coords, tol):
    """Greedy wrap-aware clustering; representatives keep the best gradient."""
    if len(coords) == 0:
        return [], []
    gn = np.linalg.norm(model.gradient_many(coords), axis=1)
    order = np.argsort(gn, kind="stable")
    reps, hits = [], []
    rep_arr = np.empty((0, coords.shape[1]))
    for i in order:
        p = coords[i]
        if len(reps):
            d = np.linalg.norm(displacement(rep_arr, p, model.periodic), axis=1)
            j = int(np.argmin(d))
            if d[j] < tol:
                hits[j] += 1
                continue
        reps.append(p)
        hits.append(1)
        rep_arr = np.vstack([rep_arr, p])
    return reps, hits


def _group_levels(values, tol):
    if not values:
        return np.empty(0), np.empty(0, dtype=int)
    vals = np.asarray(values, dtype=float)
    distinct, counts = [vals[0]], [1]
    for v in vals[1:]:
        if v - distinct[-1] > tol:
            distinct.append(v)
            counts.append(1)
        else:
            counts[-1] += 1
    return np.asarray(distinct), np.asarray(counts, dtype=int)


# ---------------------------------------------------------------------------
# catalog queries
# ---------------------------------------------------------------------------

_QUERY_TOL = 1e-9  # absorbs solver noise when a query lands on a level


def multiplicities_below(catalog, v, strict=True):
    """mu_i(M_v): per-index counts of critical points with value <= v."""
    if strict and v > catalog.v_max + 1e-12:
        raise CutoffExceededError(
            f"v = {v} above the catalog cutoff v_max = {catalog.v_max}"
        )
    mu = np.zeros(catalog.N + 1, dtype=int)
    for p in catalog.points:
        if p.value <= v + _QUERY_TOL:
            mu[p.morse_index] += 1
    return mu


def euler_characteristic(catalog, v, strict=True):
    """chi(M_v) = sum_i (-1)^i mu_i(M_v)."""
    mu = multiplicities_below(catalog, v, strict=strict)
    signs = np.where(np.arange(len(mu)) % 2 == 0, 1, -1)
    return int(signs @ mu)


def compute_epsilon0(catalog, safety=0.9):
    """Neighborhood half-thickness: safety times the minimum level gap."""
    if len(catalog.critical_values) < 2:
        raise SingleLevelError("need at least two distinct critical values")
    gaps = np.diff(catalog.critical_values)
    return float(safety * gaps.min())


def level_index_nu(catalog, v):
    """1-based index of the greatest critical value <= v; 0 when none."""
    return int(np.searchsorted(catalog.critical_values, v + _QUERY_TOL, side="right"))


def min_pairwise_distance(catalog):
    """Smallest coordinate distance between catalog points (wrap-aware)."""
    pts = [p.coords for p in catalog.points]
    if len(pts) < 2:
        return None
    A = np.asarray(pts)
    best = np.inf
    for i in range(len(A) - 1):
        d = np.linalg.norm(displacement(A[i + 1 :], A[i], catalog.periodic), axis=1)
        best = min(best, float(d.min()))
    return best


def perturb_degenerate(model, a):
    """Tilt the potential by a.q to split symmetry-degenerate critical sets."""
    a = np.asarray(a, dtype=float)
    if not a.any():
        return model
    return TiltedModel(model, a)


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------


def catalog_to_json(catalog):
    return {
        "N": catalog.N,
        "model": catalog.model_spec,
        "tolerances": catalog.tolerances,
        "seed": catalog.seed,
        "v_max": catalog.v_max,
        "periodic": catalog.periodic,
        "metadata": catalog.metadata,
        "points": [p.to_json() for p in catalog.points],
    }


def catalog_from_json(d):
    points = [CriticalPoint.from_json(p) for p in d["points"]]
    values, counts = _group_levels(
        [p.value for p in points], d.get("tolerances", {}).get("value_group_tol", 1e-8)
    )
    return CriticalCatalog(
        N=int(d["N"]),
        points=points,
        critical_values=values,
        level_counts=counts,
        v_max=float(d["v_max"]),
        periodic=bool(d.get("periodic", False)),
        model_spec=d.get("model", {}),
        tolerances=d.get("tolerances", {}),
        seed=int(d.get("seed", 0)),
        metadata=d.get("metadata", {}),
    )


def save_catalog(catalog, path):
    with open(path, "w") as fh:
        json.dump(catalog_to_json(catalog), fh, indent=1)


def load_catalog(path):
    with open(path) as fh:
        return catalog_from_json(json.load(fh))


def catalog_model(catalog):
    """Rebuild the model a catalog was computed for."""
    return model_from_spec(catalog.model_spec)
