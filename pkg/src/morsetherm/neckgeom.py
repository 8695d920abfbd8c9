"""Morse-chart neighborhood geometry.

In the normal form V = v_c - |X|^2 + |Y|^2 the level slice at offset
xi = v - v_c, cut to the neighborhood walls |X||Y| = r, has angular-
integrated area

    s(xi, k, N) = (1/2) Surf(k) Surf(N-k) F(xi, k, N)

with the radial factor

    F_plus(xi,k,N)  = int_{sqrt(xi)}^{beta} y^{N-k-1} (y^2-xi)^{(k-2)/2} dy   (xi > 0)
    F_minus(xi,k,N) = int_{0}^{beta}        y^{N-k-1} (y^2-xi)^{(k-2)/2} dy   (xi <= 0)

where alpha(xi,r) = (sqrt(xi^2+4r^2)-xi)/2, beta = sqrt((sqrt(xi^2+4r^2)+xi)/2),
so that alpha*beta^2 = r^2 and beta^2 - xi = alpha identically. The
angular factor Surf(k) Surf(N-k) is forced by the polar split
d^N x = Surf(k)|X|^{k-1} d|X| Surf(N-k)|Y|^{N-k-1} d|Y| and is validated
against a Monte Carlo oracle (see the decompose module).

Edge indexes k in {0, N} have one empty angular block; their slices are
sphere shells handled by closed form. Even k gives an elementary
antiderivative; odd k is evaluated by an integration-by-parts descent
in the y-exponent with explicitly computed initial conditions (the
nearly singular log(sqrt(xi)) term in the depth-0 condition always
enters multiplied by xi, which cures it as xi -> 0). Everything is
cross-checked against adaptive quadrature.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import DimensionTooSmallError, EdgeIndexError
from .morse import min_pairwise_distance

QUAD_TOL = 1e-12


def sphere_surface(n):
    """Surface area of the unit sphere embedded in n-space: 2 pi^{n/2} / Gamma(n/2)."""
    if n < 1:
        raise ValueError("sphere_surface requires n >= 1")
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


def alpha_beta(xi, r):
    """Quadric-wall intersection scales; alpha*beta^2 = r^2, beta^2 - xi = alpha."""
    if r <= 0:
        raise ValueError("wall parameter r must be positive")
    s = math.hypot(xi, 2.0 * r)
    return (s - xi) / 2.0, math.sqrt((s + xi) / 2.0)


def _check_interior(xi, k, N):
    if k in (0, N):
        raise EdgeIndexError(f"k = {k} is an edge index; use eval_F_edge")
    if not 0 < k < N:
        raise ValueError(f"index k = {k} outside [0, {N}]")
    if N < 2:
        raise DimensionTooSmallError("interior slice integrals need N >= 2")
    if N == 2 and xi == 0.0:
        raise DimensionTooSmallError("F(0, k, 2) diverges; need N >= 3 at xi = 0")


def eval_F(xi, k, N, r=1.0, tol=QUAD_TOL):
    """Radial slice factor by adaptive quadrature (the arbitration path).

    For xi > 0 the substitution y = sqrt(xi + t^2) removes the
    (y^2-xi)^{(k-2)/2} endpoint singularity, leaving the smooth
    integrand t^{k-1} (xi + t^2)^{(N-k-2)/2} on [0, sqrt(alpha)].
    """
    _check_interior(xi, k, N)
    alpha, beta = alpha_beta(xi, r)
    if xi > 0:
        ex = (N - k - 2) / 2.0
        val, _ = quad(
            lambda t: t ** (k - 1) * (xi + t * t) ** ex,
            0.0,
            math.sqrt(alpha),
            epsabs=tol,
            epsrel=tol,
            limit=200,
        )
    else:
        ex = (k - 2) / 2.0
        val, _ = quad(
            lambda y: y ** (N - k - 1) * (y * y - xi) ** ex,
            0.0,
            beta,
            epsabs=tol,
            epsrel=tol,
            limit=200,
        )
    return val


def eval_F_even(xi, k, N, r=1.0):
    """Elementary antiderivative for even k: binomial expansion of (y^2-xi)^m."""
    _check_interior(xi, k, N)
    if k % 2:
        raise ValueError("eval_F_even requires even k")
    m = (k - 2) // 2
    alpha, beta = alpha_beta(xi, r)
    lower_root = math.sqrt(xi) if xi > 0 else 0.0
    total = 0.0
    for j in range(m + 1):
        P = N - k + 2 * j
        term = beta ** P
        if xi > 0:
            term -= lower_root ** P
        total += math.comb(m, j) * (-xi) ** (m - j) * term / P
    return total


def eval_F_recursive(xi, k, N, r=1.0):
    """Closed form for odd k via the exponent-descent recursion.

    With n = (k-3)/2 (so the half-integer exponent is n + 1/2) and
    J(p) = int y^p (y^2-xi)^{n+1/2} dy over the slice range,
    integration by parts gives

        J(p) = beta^{p-1} alpha^{n+3/2} / (2n+2+p)
             + (p-1) xi J(p-2) / (2n+2+p)

    descending to the explicitly computed depth-0/1 conditions. The
    depth-0 condition for xi > 0 goes through the auxiliary integrals
    I(m) = int (y^2-xi)^{m+1/2}/y^2 and H(m) = int (y^2-xi)^{m+1/2}/y^4:

        J(0) = [alpha^{n+3/2}/beta - xi I(n)] / (2n+2)
        I(m) = [alpha^{m+3/2}/beta^3 - 3 xi H(m)] / (2m)      (m >= 1)
        H(m) = I(m-1) - xi H(m-1)                              (m >= 2)

    seeded by explicit H(1) and I(0); for xi < 0 the same parts
    rearrange into W(m) = [beta alpha^{m+1/2} - (2m+1) xi W(m-1)]/(2m+2)
    from W(-1). All iterative: no recursion depth limit.
    """
    _check_interior(xi, k, N)
    if k % 2 == 0:
        raise ValueError("eval_F_recursive requires odd k")
    if xi == 0.0:
        return r ** ((N - 2) / 2.0) / (N - 2)
    n = (k - 3) // 2
    alpha, beta = alpha_beta(xi, r)
    sqa = math.sqrt(alpha)
    p0 = N - k - 1
    pbase = p0 % 2

    if pbase == 1:
        J = alpha ** (n + 1.5) / (2 * n + 3)
        if xi < 0:
            J -= (-xi) ** (n + 1.5) / (2 * n + 3)
    else:
        J = _depth0(xi, n, alpha, beta, sqa)

    for p in range(pbase + 2, p0 + 1, 2):
        denom = 2 * n + 2 + p
        J = (beta ** (p - 1) * alpha ** (n + 1.5) + (p - 1) * xi * J) / denom
    return J


def _depth0(xi, n, alpha, beta, sqa):
    """J(0) = int (y^2-xi)^{n+1/2} dy over the slice range."""
    logterm = math.log(beta + sqa) - 0.5 * math.log(abs(xi))
    if xi < 0:
        W = logterm  # W(-1)
        for m in range(0, n + 1):
            W = (beta * alpha ** (m + 0.5) - (2 * m + 1) * xi * W) / (2 * m + 2)
        return W
    if n == -1:
        return logterm
    I = -sqa / beta + logterm  # I(0)
    if n >= 1:
        H = (xi / (3 * beta ** 3) - 4 / (3 * beta)) * sqa + logterm  # H(1)
        I = (alpha ** 2.5 / beta ** 3 - 3 * xi * H) / 2.0  # I(1)
        for m in range(2, n + 1):
            H = I - xi * H
            I = (alpha ** (m + 1.5) / beta ** 3 - 3 * xi * H) / (2 * m)
    return (alpha ** (n + 1.5) / beta - xi * I) / (2 * n + 2)


def eval_F_closed(xi, k, N, r=1.0):
    """Closed-form radial factor, dispatching on index parity."""
    if k % 2:
        return eval_F_recursive(xi, k, N, r)
    return eval_F_even(xi, k, N, r)


def eval_F_edge(xi, k, N, r=None):
    """Slice density at an edge index, angular factor included.

    A minimum (k = 0) has level slices |Y|^2 = xi: spheres of radius
    sqrt(xi), density (1/2) Surf(N) xi^{(N-2)/2} for xi > 0 and zero
    below. A top index k = N is the mirror image in -xi. The wall
    parameter is irrelevant: one angular block is empty.
    """
    if k == 0:
        z = xi
    elif k == N:
        z = -xi
    else:
        raise EdgeIndexError(f"k = {k} is not an edge index for N = {N}")
    if z <= 0:
        return 0.0
    return 0.5 * sphere_surface(N) * z ** ((N - 2) / 2.0)


def slice_density(xi, k, N, r=1.0):
    """Angular-integrated slice area of the chart neighborhood at offset xi."""
    if k in (0, N):
        return eval_F_edge(xi, k, N)
    return 0.5 * sphere_surface(k) * sphere_surface(N - k) * eval_F_closed(xi, k, N, r)


def _edge_slice_integral(N, a, b):
    """int_a^b (1/2) Surf(N) z^{(N-2)/2} dz over the positive part."""
    a = max(a, 0.0)
    if b <= a:
        return 0.0
    return sphere_surface(N) / N * (b ** (N / 2.0) - a ** (N / 2.0))


def integral_slice_density(k, N, lo, hi, r=1.0, tol=QUAD_TOL):
    """int_lo^hi slice_density(xi) dxi, split at xi = 0 for quadrature."""
    if hi <= lo:
        return 0.0
    if k == 0:
        return _edge_slice_integral(N, lo, hi)
    if k == N:
        return _edge_slice_integral(N, -hi, -lo)
    pref = 0.5 * sphere_surface(k) * sphere_surface(N - k)
    total = 0.0
    f = lambda x: eval_F_closed(x, k, N, r)
    if lo < 0:
        val, _ = quad(f, lo, min(hi, 0.0), epsabs=tol, epsrel=tol, limit=200)
        total += val
    if hi > 0:
        val, _ = quad(f, max(lo, 0.0), hi, epsabs=tol, epsrel=tol, limit=200)
        total += val
    return pref * total


def coefficient_A(N, i, eps0, r=1.0):
    """Full-band slice volume without the chart Jacobian:

    A(N,i,eps0) = (1/2) Surf(i) Surf(N-i) [int_{-eps0}^0 F_- + int_0^{eps0} F_+]
    for interior i; the matching sphere-shell volume at the edges.
    """
    if eps0 <= 0:
        raise ValueError("eps0 must be positive")
    return integral_slice_density(i, N, -eps0, eps0, r)


def coefficient_B(N, i, delta_v, eps0, r, J):
    """Partial-band bridge for one critical point:

    B(N,i,dv,eps0) = J * int_{-eps0}^{min(dv, eps0)} slice_density(xi) dxi,
    zero at dv = -eps0 and equal to J*A at dv = eps0; monotone and
    continuous in between.
    """
    hi = min(delta_v, eps0)
    if hi <= -eps0:
        return 0.0
    return J * integral_slice_density(i, N, -eps0, hi, r)


def g_weights(catalog, v):
    """Mean chart factor per Morse index over points with value <= v.

    Indexes with no points below v are absent from the result.
    """
    sums, counts = {}, {}
    for p in catalog.points:
        if p.value <= v + 1e-9:
            sums[p.morse_index] = sums.get(p.morse_index, 0.0) + p.jacobian_factor
            counts[p.morse_index] = counts.get(p.morse_index, 0) + 1
    return {i: sums[i] / counts[i] for i in sums}


@dataclass(frozen=True)
class NeckParams:
    """Neighborhood shape: dimension, index, wall parameter, half-thickness."""

    N: int
    k: int
    r: float
    eps0: float

    def __post_init__(self):
        if not 0 <= self.k <= self.N:
            raise ValueError("need 0 <= k <= N")
        if self.r <= 0 or self.eps0 <= 0:
            raise ValueError("r and eps0 must be positive")


class NeighborhoodCoefficients:
    """Per-index A coefficients and per-point B bridges for one catalog.

    Carries provenance (N, eps0, r, catalog) and caches the full-band
    integrals so the topological term is cheap on plateaus.
    """

    def __init__(self, catalog, eps0, r):
        if eps0 <= 0 or r <= 0:
            raise ValueError("eps0 and r must be positive")
        self.catalog = catalog
        self.N = catalog.N
        self.eps0 = float(eps0)
        self.r = float(r)
        present = sorted({p.morse_index for p in catalog.points})
        self.A = {k: coefficient_A(self.N, k, self.eps0, self.r) for k in present}

    @classmethod
    def from_catalog(cls, catalog, eps0=None, r=None, safety=0.9):
        from .morse import compute_epsilon0

        if eps0 is None:
            eps0 = compute_epsilon0(catalog, safety=safety)
        if r is None:
            r = choose_wall_parameter(catalog, eps0)
        return cls(catalog, eps0, r)

    def A_for(self, k):
        if k not in self.A:
            self.A[k] = coefficient_A(self.N, k, self.eps0, self.r)
        return self.A[k]

    def B_for_point(self, point, delta_v):
        return coefficient_B(
            self.N, point.morse_index, delta_v, self.eps0, self.r, point.jacobian_factor
        )

    def g(self, v):
        return g_weights(self.catalog, v)

    def to_json(self):
        return {
            "N": self.N,
            "eps0": self.eps0,
            "r": self.r,
            "A": {str(k): v for k, v in sorted(self.A.items())},
        }


def topological_term(catalog, coeffs, v):
    """Neighborhood contribution to vol(M_v) from the chart closed forms.

    Uniform per-point sum: every catalog point whose band reaches below
    v (v_c - eps0 < v) contributes J * int_{-eps0}^{min(v - v_c, eps0)}
    of its slice density. Away from bands this collapses to the plateau
    form sum_i A(N,i,eps0) g_i mu_i(M_v) (a staircase), while inside a
    band the partial integral is the B bridge that rounds the corner.
    """
    eps0, total = coeffs.eps0, 0.0
    for p in catalog.points:
        dv = v - p.value
        if dv <= -eps0:
            continue
        if dv >= eps0:
            total += coeffs.A_for(p.morse_index) * p.jacobian_factor
        else:
            total += coeffs.B_for_point(p, dv)
    return total


def plateau_term(catalog, coeffs, v):
    """sum_i A(N,i,eps0) g_i mu_i(M_v): valid between critical bands."""
    from .morse import multiplicities_below

    mu = multiplicities_below(catalog, v, strict=False)
    g = g_weights(catalog, v)
    return sum(coeffs.A_for(i) * g[i] * mu[i] for i in g)


def choose_wall_parameter(catalog, eps0, target_fraction=0.4, r_max=1.0):
    """Wall parameter keeping neighborhoods inside disjoint surroundings.

    The chart box around a point spans at most 2 beta(eps0, r) /
    sqrt(min|lam|) in configuration distance, so beta is budgeted a
    target fraction of the minimum pairwise critical distance. When the
    cap radius sqrt(eps0) alone exceeds the budget no r can satisfy it;
    the caller is expected to probe for overlap empirically.
    """
    r_heur = min(r_max, 1.7 * eps0)
    d_min = min_pairwise_distance(catalog)
    if d_min is None:
        return r_heur
    lam_min = min(float(np.abs(p.hessian_eigenvalues).min()) for p in catalog.points)
    if lam_min <= 0:
        return r_heur
    beta_target = target_fraction * d_min * math.sqrt(lam_min) / 2.0
    b2 = beta_target * beta_target
    if 2 * b2 - eps0 <= eps0:
        return min(r_heur, max(eps0 / 4.0, 1e-6))
    return min(r_heur, 0.5 * math.sqrt((2 * b2 - eps0) ** 2 - eps0 ** 2))
