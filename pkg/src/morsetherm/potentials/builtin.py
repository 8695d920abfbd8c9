"""Built-in model catalog.

Parameterizations:
    harmonic              V = sum_i q_i^2
    uncoupled_double_well V = sum_i (q_i^4/4 - q_i^2/2)
    lattice_phi4_1d       V = sum_i (q_i^4/4 - q_i^2/2)
                              + (J/2) sum_i (q_{i+1}-q_i)^2, periodic
    xy_chain_1d           V = sum_i [1 - cos(q_{i+1}-q_i)]
                              + h sum_i (1 - cos q_i), periodic
    quadratic_form        V = v0 + (1/2) sum_i lam_i (q_i - c_i)^2

The quadratic form is its own second-order expansion, which makes it the
reference system for validating neighborhood-volume formulas against
Monte Carlo.
"""

from math import gamma, lgamma, log, pi

import numpy as np

from ..errors import ConfigError
from .base import PotentialModel


def _box(N, halfwidth):
    return np.column_stack([np.full(N, -halfwidth), np.full(N, halfwidth)])


class Harmonic(PotentialModel):
    """V = sum q_i^2; sub-level sets are balls of radius sqrt(v)."""

    kind = "harmonic"

    def __init__(self, N, box_halfwidth=2.0):
        super().__init__(N, _box(N, box_halfwidth), {"box_halfwidth": box_halfwidth})

    def value(self, q):
        q = np.asarray(q, dtype=float)
        return float(q @ q)

    def gradient(self, q):
        return 2.0 * np.asarray(q, dtype=float)

    def hessian(self, q):
        return 2.0 * np.eye(self.N)

    def value_many(self, Q):
        Q = np.asarray(Q, dtype=float)
        return np.einsum("ij,ij->i", Q, Q)

    def gradient_many(self, Q):
        return 2.0 * np.asarray(Q, dtype=float)

    def hessian_many(self, Q):
        Q = np.asarray(Q, dtype=float)
        return np.broadcast_to(2.0 * np.eye(self.N), (len(Q), self.N, self.N)).copy()

    @property
    def min_value(self):
        return 0.0

    def analytic_sublevel_volume(self, v):
        # vol of the N-ball of radius sqrt(v); the box must contain it
        if v <= 0:
            return 0.0
        N = self.N
        return float(np.exp((N / 2) * log(pi * v) - lgamma(N / 2 + 1)))


class UncoupledDoubleWell(PotentialModel):
    """V = sum (q_i^4/4 - q_i^2/2): 3^N critical points on {-1,0,1}^N."""

    kind = "uncoupled_double_well"

    def __init__(self, N, box_halfwidth=2.0):
        super().__init__(N, _box(N, box_halfwidth), {"box_halfwidth": box_halfwidth})

    def value(self, q):
        q = np.asarray(q, dtype=float)
        q2 = q * q
        return float(np.sum(0.25 * q2 * q2 - 0.5 * q2))

    def gradient(self, q):
        q = np.asarray(q, dtype=float)
        return q * q * q - q

    def hessian(self, q):
        q = np.asarray(q, dtype=float)
        return np.diag(3.0 * q * q - 1.0)

    def value_many(self, Q):
        Q = np.asarray(Q, dtype=float)
        q2 = Q * Q
        return np.sum(0.25 * q2 * q2 - 0.5 * q2, axis=1)

    def gradient_many(self, Q):
        Q = np.asarray(Q, dtype=float)
        return Q * Q * Q - Q

    def hessian_many(self, Q):
        Q = np.asarray(Q, dtype=float)
        H = np.zeros((len(Q), self.N, self.N))
        idx = np.arange(self.N)
        H[:, idx, idx] = 3.0 * Q * Q - 1.0
        return H

    @property
    def min_value(self):
        return -0.25 * self.N


class LatticePhi4(PotentialModel):
    """1-d lattice of quartic wells with nearest-neighbor springs, periodic."""

    kind = "lattice_phi4_1d"

    def __init__(self, N, coupling=0.2, box_halfwidth=2.5):
        if not np.isfinite(coupling) or coupling < 0:
            raise ConfigError("coupling must be finite and >= 0")
        super().__init__(
            N, _box(N, box_halfwidth), {"coupling": coupling, "box_halfwidth": box_halfwidth}
        )
        self.coupling = float(coupling)

    def value(self, q):
        q = np.asarray(q, dtype=float)
        d = np.roll(q, -1) - q
        q2 = q * q
        return float(np.sum(0.25 * q2 * q2 - 0.5 * q2) + 0.5 * self.coupling * np.sum(d * d))

    def gradient(self, q):
        q = np.asarray(q, dtype=float)
        lap = np.roll(q, -1) + np.roll(q, 1) - 2.0 * q
        return q * q * q - q - self.coupling * lap

    def hessian(self, q):
        q = np.asarray(q, dtype=float)
        H = np.diag(3.0 * q * q - 1.0 + 2.0 * self.coupling)
        for i in range(self.N):
            j = (i + 1) % self.N
            H[i, j] -= self.coupling
            H[j, i] -= self.coupling
        return H

    def value_many(self, Q):
        Q = np.asarray(Q, dtype=float)
        d = np.roll(Q, -1, axis=1) - Q
        q2 = Q * Q
        return np.sum(0.25 * q2 * q2 - 0.5 * q2, axis=1) + 0.5 * self.coupling * np.sum(d * d, axis=1)

    def gradient_many(self, Q):
        Q = np.asarray(Q, dtype=float)
        lap = np.roll(Q, -1, axis=1) + np.roll(Q, 1, axis=1) - 2.0 * Q
        return Q * Q * Q - Q - self.coupling * lap

    def hessian_many(self, Q):
        Q = np.asarray(Q, dtype=float)
        H = np.zeros((len(Q), self.N, self.N))
        idx = np.arange(self.N)
        H[:, idx, idx] = 3.0 * Q * Q - 1.0 + 2.0 * self.coupling
        for i in range(self.N):
            j = (i + 1) % self.N
            H[:, i, j] -= self.coupling
            H[:, j, i] -= self.coupling
        return H

    @property
    def min_value(self):
        # uniform ground states q_i = +-1 carry no spring energy
        return -0.25 * self.N


class XYChain(PotentialModel):
    """Periodic chain of rotators with an optional pinning field h >= 0.

    Angles live on [-pi, pi); critical points are equivalence classes
    mod 2pi, so deduplication must be wrap-aware. With h = 0 the global
    rotation symmetry makes every critical point degenerate.
    """

    kind = "xy_chain_1d"
    periodic = True

    def __init__(self, N, field=0.0):
        if not np.isfinite(field) or field < 0:
            raise ConfigError("field must be finite and >= 0")
        super().__init__(N, _box(N, pi), {"field": field})
        self.field = float(field)

    def value(self, q):
        q = np.asarray(q, dtype=float)
        d = np.roll(q, -1) - q
        return float(np.sum(1.0 - np.cos(d)) + self.field * np.sum(1.0 - np.cos(q)))

    def gradient(self, q):
        q = np.asarray(q, dtype=float)
        d_fwd = np.roll(q, -1) - q  # q_{i+1} - q_i
        d_bwd = q - np.roll(q, 1)
        return np.sin(d_bwd) - np.sin(d_fwd) + self.field * np.sin(q)

    def hessian(self, q):
        q = np.asarray(q, dtype=float)
        d_fwd = np.roll(q, -1) - q
        c_fwd = np.cos(d_fwd)
        H = np.diag(c_fwd + np.roll(c_fwd, 1) + self.field * np.cos(q))
        for i in range(self.N):
            j = (i + 1) % self.N
            H[i, j] -= c_fwd[i]
            H[j, i] -= c_fwd[i]
        return H

    def value_many(self, Q):
        Q = np.asarray(Q, dtype=float)
        d = np.roll(Q, -1, axis=1) - Q
        out = np.sum(1.0 - np.cos(d), axis=1)
        if self.field:
            out = out + self.field * np.sum(1.0 - np.cos(Q), axis=1)
        return out

    def gradient_many(self, Q):
        Q = np.asarray(Q, dtype=float)
        d_fwd = np.roll(Q, -1, axis=1) - Q
        d_bwd = Q - np.roll(Q, 1, axis=1)
        return np.sin(d_bwd) - np.sin(d_fwd) + self.field * np.sin(Q)

    def hessian_many(self, Q):
        Q = np.asarray(Q, dtype=float)
        d_fwd = np.roll(Q, -1, axis=1) - Q
        c_fwd = np.cos(d_fwd)
        H = np.zeros((len(Q), self.N, self.N))
        idx = np.arange(self.N)
        H[:, idx, idx] = c_fwd + np.roll(c_fwd, 1, axis=1) + self.field * np.cos(Q)
        for i in range(self.N):
            j = (i + 1) % self.N
            H[:, i, j] -= c_fwd[:, i]
            H[:, j, i] -= c_fwd[:, i]
        return H

    @property
    def min_value(self):
        return 0.0


class QuadraticForm(PotentialModel):
    """V = v0 + (1/2) sum lam_i (q_i - c_i)^2 with prescribed curvatures.

    Exactly equal to its own Morse-chart expansion around the single
    critical point at c, any index realizable through the signs of lam.
    """

    kind = "quadratic_form"

    def __init__(self, eigenvalues, offset=0.0, center=None, box_halfwidth=3.0):
        lam = np.asarray(eigenvalues, dtype=float)
        if lam.ndim != 1 or np.any(lam == 0) or not np.all(np.isfinite(lam)):
            raise ConfigError("eigenvalues must be finite and nonzero")
        N = len(lam)
        c = np.zeros(N) if center is None else np.asarray(center, dtype=float)
        super().__init__(
            N,
            _box(N, box_halfwidth),
            {
                "eigenvalues": lam.tolist(),
                "offset": float(offset),
                "center": c.tolist(),
                "box_halfwidth": box_halfwidth,
            },
        )
        self.lam = lam
        self.offset = float(offset)
        self.center = c

    def value(self, q):
        d = np.asarray(q, dtype=float) - self.center
        return self.offset + 0.5 * float(np.sum(self.lam * d * d))

    def gradient(self, q):
        d = np.asarray(q, dtype=float) - self.center
        return self.lam * d

    def hessian(self, q):
        return np.diag(self.lam)

    def value_many(self, Q):
        D = np.asarray(Q, dtype=float) - self.center
        return self.offset + 0.5 * np.sum(self.lam * D * D, axis=1)

    def gradient_many(self, Q):
        D = np.asarray(Q, dtype=float) - self.center
        return self.lam * D

    def hessian_many(self, Q):
        return np.broadcast_to(np.diag(self.lam), (len(Q), self.N, self.N)).copy()

    @property
    def min_value(self):
        if np.all(self.lam > 0):
            return self.offset
        return None

    def analytic_sublevel_volume(self, v):
        if not np.all(self.lam > 0):
            return None
        if v <= self.offset:
            return 0.0
        N = self.N
        semiaxes = np.sqrt(2.0 * (v - self.offset) / self.lam)
        return float(pi ** (N / 2) / gamma(N / 2 + 1) * np.prod(semiaxes))


BUILTIN_KINDS = {
    "harmonic": Harmonic,
    "uncoupled_double_well": UncoupledDoubleWell,
    "lattice_phi4_1d": LatticePhi4,
    "xy_chain_1d": XYChain,
    "quadratic_form": QuadraticForm,
}

# short aliases accepted on the command line
ALIASES = {"double_well": "uncoupled_double_well", "phi4": "lattice_phi4_1d", "xy_chain": "xy_chain_1d"}


def make_model(kind, N=None, parameters=None):
    """Instantiate a built-in model from its serialized description."""
    params = dict(parameters or {})
    kind = ALIASES.get(kind, kind)
    if kind == "harmonic":
        return Harmonic(N, **params)
    if kind == "uncoupled_double_well":
        return UncoupledDoubleWell(N, **params)
    if kind == "lattice_phi4_1d":
        return LatticePhi4(N, **params)
    if kind == "xy_chain_1d":
        return XYChain(N, **params)
    if kind == "quadratic_form":
        return QuadraticForm(**params)
    if kind == "dsl":
        from .dsl import DslPotential

        return DslPotential(params.pop("source"), N, **params)
    raise ConfigError(f"unknown model kind {kind!r}")


def model_from_spec(spec):
    """Rebuild a model from the JSON object produced by ``model.spec()``."""
    spec = dict(spec)
    kind = spec.pop("kind")
    N = spec.pop("N", None)
    params = dict(spec.pop("parameters", {}))
    tilt = spec.pop("tilt", None)
    model = make_model(kind.removeprefix("tilted_"), N, params)
    if tilt is not None:
        from .base import TiltedModel

        model = TiltedModel(model, np.asarray(tilt, dtype=float))
    return model
