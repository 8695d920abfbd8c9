"""Base interface for evaluatable potentials.

A model bundles the dimension N, a per-coordinate sampling box, and an
evaluator producing value / gradient / Hessian at a point. Evaluators
are pure functions of the point: safe to call concurrently.
"""

import hashlib
import json

import numpy as np

from ..errors import DomainError, NonFiniteError


class PotentialModel:
    """An N degree-of-freedom potential with exact derivatives.

    Subclasses implement ``value``, ``gradient`` and ``hessian`` for a
    single point; the ``*_many`` batch variants default to loops and are
    overridden with vectorized code where the functional form allows.
    """

    kind = "abstract"
    periodic = False

    def __init__(self, N, domain_box, parameters=None):
        self.N = int(N)
        if self.N < 1:
            raise ValueError("N must be a positive integer")
        box = np.asarray(domain_box, dtype=float)
        if box.shape != (self.N, 2) or not np.all(box[:, 0] < box[:, 1]):
            raise ValueError("domain_box must be N rows of increasing [lo, hi]")
        self.domain_box = box
        self.parameters = dict(parameters or {})

    # -- single-point evaluators ------------------------------------------
    def value(self, q):
        raise NotImplementedError

    def gradient(self, q):
        raise NotImplementedError

    def hessian(self, q):
        raise NotImplementedError

    # -- batch evaluators ---------------------------------------------------
    def value_many(self, Q):
        Q = np.asarray(Q, dtype=float)
        return np.array([self.value(q) for q in Q])

    def gradient_many(self, Q):
        Q = np.asarray(Q, dtype=float)
        return np.array([self.gradient(q) for q in Q])

    def hessian_many(self, Q):
        Q = np.asarray(Q, dtype=float)
        return np.array([self.hessian(q) for q in Q])

    # -- metadata -------------------------------------------------------------
    @property
    def min_value(self):
        """Global minimum of the potential, when known analytically."""
        return None

    def analytic_sublevel_volume(self, v):
        """Exact vol{q : V(q) <= v}, or None when no closed form exists."""
        return None

    def in_box(self, q):
        q = np.asarray(q, dtype=float)
        return bool(np.all(q >= self.domain_box[:, 0]) and np.all(q <= self.domain_box[:, 1]))

    def spec(self):
        """JSON-serializable description {kind, N, parameters, domain_box}."""
        return {
            "kind": self.kind,
            "N": self.N,
            "parameters": dict(self.parameters),
            "domain_box": self.domain_box.tolist(),
        }

    def spec_hash(self):
        blob = json.dumps(self.spec(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]

    def __repr__(self):
        return f"<{type(self).__name__} N={self.N}>"


class TiltedModel(PotentialModel):
    """Base potential plus a linear term a.q.

    The generic way to remove symmetry-induced Hessian degeneracy:
    gradients shift by the constant vector a, Hessians are untouched.
    A nonzero tilt breaks angular periodicity, so the periodic flag is
    dropped.
    """

    kind = "tilted"

    def __init__(self, base, a):
        a = np.asarray(a, dtype=float)
        if a.shape != (base.N,):
            raise ValueError("tilt vector length must equal N")
        super().__init__(base.N, base.domain_box, base.parameters)
        self.base = base
        self.tilt = a
        self.kind = f"tilted_{base.kind}"

    def value(self, q):
        return self.base.value(q) + float(self.tilt @ np.asarray(q, dtype=float))

    def gradient(self, q):
        return self.base.gradient(q) + self.tilt

    def hessian(self, q):
        return self.base.hessian(q)

    def value_many(self, Q):
        return self.base.value_many(Q) + np.asarray(Q, dtype=float) @ self.tilt

    def gradient_many(self, Q):
        return self.base.gradient_many(Q) + self.tilt

    def hessian_many(self, Q):
        return self.base.hessian_many(Q)

    def spec(self):
        s = self.base.spec()
        s["tilt"] = self.tilt.tolist()
        return s


# ---------------------------------------------------------------------------
# operation wrappers: validate the contract, then defer to the evaluator
# ---------------------------------------------------------------------------


def eval_potential(model, q):
    """V(q) with domain and finiteness checks."""
    q = _check_point(model, q)
    try:
        v = float(model.value(q))
    except OverflowError as exc:
        raise NonFiniteError(f"potential overflowed at {q}") from exc
    if not np.isfinite(v):
        raise NonFiniteError(f"potential is not finite at {q}")
    return v


def eval_gradient(model, q):
    q = _check_point(model, q)
    g = np.asarray(model.gradient(q), dtype=float)
    if not np.all(np.isfinite(g)):
        raise NonFiniteError(f"gradient is not finite at {q}")
    return g


def eval_hessian(model, q):
    q = _check_point(model, q)
    H = np.asarray(model.hessian(q), dtype=float)
    if not np.all(np.isfinite(H)):
        raise NonFiniteError(f"Hessian is not finite at {q}")
    return 0.5 * (H + H.T)


def _check_point(model, q):
    q = np.asarray(q, dtype=float)
    if q.shape != (model.N,):
        raise DomainError(f"expected a length-{model.N} point, got shape {q.shape}")
    if not model.in_box(q):
        raise DomainError(f"point {q} outside domain box")
    return q
