"""Two-class Gaussian-mixture analysis of class-wise transformations.

The clean model is x ~ N(y*mu, I) with labels y in {-1, +1} and equal
priors; its Bayes boundary is the hyperplane mu.x = 0 with accuracy
Phi(||mu||).  Transforming each class by T_y = lam_y * R_y (R_y orthogonal)
keeps the mixture Gaussian, N(y*T_y*mu, lam_y^2 I), and moves the Bayes
boundary to the quadric

    A x.x + B.x + C = 0,
    A = lam_{-1}^-2 - lam_{+1}^-2,
    B = 2 (lam_{-1}^-2 T_{-1} + lam_{+1}^-2 T_{+1}) mu,
    C = d * ln(lam_{-1}^2 / lam_{+1}^2),

classifying negative scores as -1.  With b = B/A, c = C/A, the accuracy of
that quadric on *clean* data is bounded by p1 + p2 where

    p_i = (1/2) * exp(g(t_i)),
    g(t) = alpha t^2 / (1 - 2t) + beta t - (d/2) ln(1 - 2t),

with alpha1 = ||b + 2 mu||^2 / 2, beta1 = mu.mu + b.mu + c, alpha2 =
||b - 2 mu||^2 / 2, beta2 = -mu.mu + b.mu - c - 2d, and any
t1, t2 in [0, 1/2).  When beta1 < -d and beta2 < -d the bound drops below
one: class-wise transforms chosen so that b.mu << 0 make the protected-data
boundary provably worse than Phi(||mu||) on clean data.

Everything here is verified numerically: Monte-Carlo moments for the
closure claim, Chernoff-bound dominance on sampled tails, and the accuracy
bound against direct simulation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from pcveil.errors import InvalidParameterError
from pcveil.seeding import substream

_MC_BATCH = 1 << 17

ORTHOGONALITY_TOL = 1e-10


def _as_mu(mu) -> np.ndarray:
    arr = np.asarray(mu, dtype=np.float64)
    if arr.ndim != 1 or arr.size < 1:
        raise InvalidParameterError(f"mu must be a 1-D vector, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise InvalidParameterError("mu must be finite")
    return arr


def _check_orthogonal(m: np.ndarray, name: str) -> None:
    d = m.shape[0]
    if m.shape != (d, d):
        raise InvalidParameterError(f"{name} must be square, got {m.shape}")
    err = np.max(np.abs(m @ m.T - np.eye(d)))
    if err > ORTHOGONALITY_TOL:
        raise InvalidParameterError(f"{name} is not orthogonal (max |R R^T - I| = {err:.3e})")


@dataclass(frozen=True, eq=False)
class ClassTransform:
    """Per-class scaling lam_y > 0 and orthogonal rotation R_y."""

    lam_pos: float
    rot_pos: np.ndarray
    lam_neg: float
    rot_neg: np.ndarray

    def __post_init__(self):
        if not (self.lam_pos > 0 and self.lam_neg > 0):
            raise InvalidParameterError("class scalings must be positive")
        _check_orthogonal(np.asarray(self.rot_pos, dtype=np.float64), "rot_pos")
        _check_orthogonal(np.asarray(self.rot_neg, dtype=np.float64), "rot_neg")
        if self.rot_pos.shape != self.rot_neg.shape:
            raise InvalidParameterError("class rotations must share one dimension")

    @property
    def dim(self) -> int:
        return self.rot_pos.shape[0]

    def matrix(self, label: int) -> np.ndarray:
        if label == 1:
            return self.lam_pos * self.rot_pos
        if label == -1:
            return self.lam_neg * self.rot_neg
        raise InvalidParameterError(f"label must be +1 or -1, got {label}")

    @classmethod
    def identity(cls, d: int) -> "ClassTransform":
        eye = np.eye(d)
        return cls(1.0, eye, 1.0, eye)


@dataclass(frozen=True, eq=False)
class QuadraticBoundary:
    """Coefficients of the rule sign(quad * x.x + linear.x + const).

    Negative scores classify as -1, non-negative as +1.  ``quad == 0`` is
    the degenerate linear case (equal class scalings), where the normalized
    (b, c) form does not exist.
    """

    quad: float
    linear: np.ndarray
    const: float

    @property
    def degenerate(self) -> bool:
        return self.quad == 0.0

    def normalized(self) -> tuple[np.ndarray, float]:
        if self.degenerate:
            raise InvalidParameterError("degenerate boundary (quad = 0) has no normalized form")
        return self.linear / self.quad, self.const / self.quad

    def scores(self, points) -> np.ndarray:
        x = np.atleast_2d(np.asarray(points, dtype=np.float64))
        return self.quad * np.einsum("ij,ij->i", x, x) + x @ self.linear + self.const

    def classify(self, points) -> np.ndarray:
        return np.where(self.scores(points) < 0, -1, 1)


def sample_gmm(mu, n: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Draw n labeled samples: y uniform on {-1, +1}, x = y*mu + z."""
    mu = _as_mu(mu)
    rng = substream(seed, "gmm")
    y = rng.integers(0, 2, size=n) * 2 - 1
    z = rng.standard_normal((n, mu.size))
    return y[:, None] * mu + z, y


def transform_gmm(points, labels, transforms: ClassTransform) -> np.ndarray:
    """Apply T_y to every sample of class y."""
    x = np.asarray(points, dtype=np.float64)
    y = np.asarray(labels)
    out = np.empty_like(x)
    pos = y == 1
    out[pos] = transforms.lam_pos * (x[pos] @ transforms.rot_pos.T)
    out[~pos] = transforms.lam_neg * (x[~pos] @ transforms.rot_neg.T)
    return out


def clean_accuracy_closed_form(mu) -> float:
    """Phi(||mu||): the clean Bayes boundary's accuracy on clean data."""
    norm = float(np.linalg.norm(_as_mu(mu)))
    return 0.5 * (1.0 + math.erf(norm / math.sqrt(2.0)))


def clean_boundary(mu) -> QuadraticBoundary:
    """The clean Bayes rule sign(mu.x) as a (degenerate) quadric."""
    return QuadraticBoundary(0.0, _as_mu(mu).copy(), 0.0)


def unlearnable_boundary(mu, transforms: ClassTransform) -> QuadraticBoundary:
    """Bayes boundary of the class-wise transformed mixture."""
    mu = _as_mu(mu)
    if mu.size != transforms.dim:
        raise InvalidParameterError(f"mu has dimension {mu.size} but transforms act on {transforms.dim}")
    inv_pos = transforms.lam_pos**-2.0
    inv_neg = transforms.lam_neg**-2.0
    quad = inv_neg - inv_pos
    linear = 2.0 * (inv_neg * (transforms.matrix(-1) @ mu) + inv_pos * (transforms.matrix(1) @ mu))
    const = 2.0 * mu.size * (math.log(transforms.lam_neg) - math.log(transforms.lam_pos))
    return QuadraticBoundary(quad, linear, const)


def mc_accuracy(boundary: QuadraticBoundary, mu, n: int, seed: int,
                transforms: ClassTransform | None = None) -> tuple[float, float]:
    """Monte-Carlo accuracy of ``boundary`` with its binomial standard error.

    Samples the clean mixture; when ``transforms`` is given, samples are
    class-wise transformed before classification.  Sampling is partitioned
    into fixed-size batches on independent substreams and reduced by exact
    integer counts, so the result is reproducible at any parallelism.
    """
    if n < 1:
        raise InvalidParameterError("sample count must be >= 1")
    mu = _as_mu(mu)
    correct = 0
    done = 0
    for batch in range(math.ceil(n / _MC_BATCH)):
        m = min(_MC_BATCH, n - done)
        rng = substream(seed, "mc", batch)
        y = rng.integers(0, 2, size=m) * 2 - 1
        x = y[:, None] * mu + rng.standard_normal((m, mu.size))
        if transforms is not None:
            x = transform_gmm(x, y, transforms)
        correct += int(np.sum(boundary.classify(x) == y))
        done += m
    acc = correct / n
    return acc, math.sqrt(acc * (1.0 - acc) / n)


def chernoff_tail_bound(b, c: float, d: int, gamma: float, t: float) -> float:
    """Chernoff bound on P{Z >= E[Z] + gamma} for Z = z.z + b.z + c.

    z is standard normal in dimension d, so E[Z] = d + c; the bound is
    exp(t^2 ||b||^2 / (2(1-2t)) - t(gamma + d)) / (1-2t)^(d/2) for any
    0 <= t < 1/2.
    """
    if not 0.0 <= t < 0.5:
        raise InvalidParameterError(f"t must lie in [0, 1/2), got {t}")
    bb = float(np.dot(b, b)) if np.ndim(b) else float(b) ** 2
    exponent = t * t * bb / (2.0 * (1.0 - 2.0 * t)) - t * (gamma + d)
    return math.exp(exponent) / (1.0 - 2.0 * t) ** (d / 2.0)


def mc_tail_frequency(b, d: int, gamma: float, n: int, seed: int) -> tuple[float, float]:
    """Empirical frequency of {Z >= E[Z] + gamma} with its standard error.

    The additive constant c of Z cancels against E[Z] = d + c, so the event
    reduces to z.z + b.z >= d + gamma and c is not a parameter here.
    """
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    if b.size != d:
        raise InvalidParameterError(f"b has dimension {b.size}, expected {d}")
    hits = 0
    done = 0
    for batch in range(math.ceil(n / _MC_BATCH)):
        m = min(_MC_BATCH, n - done)
        z = substream(seed, "tail", batch).standard_normal((m, d))
        stat = np.einsum("ij,ij->i", z, z) + z @ b
        hits += int(np.sum(stat >= d + gamma))
        done += m
    freq = hits / n
    return freq, math.sqrt(freq * (1.0 - freq) / n)


def bound_exponent(alpha: float, beta: float, d: int, t: float) -> float:
    """g(t) = alpha t^2/(1-2t) + beta t - (d/2) ln(1-2t)."""
    if not 0.0 <= t < 0.5:
        raise InvalidParameterError(f"t must lie in [0, 1/2), got {t}")
    return alpha * t * t / (1.0 - 2.0 * t) + beta * t - 0.5 * d * math.log1p(-2.0 * t)


def bound_term(alpha: float, beta: float, d: int, t: float) -> float:
    """One half of the accuracy bound: (1/2) * exp(g(t)); equals 1/2 at t=0."""
    return 0.5 * math.exp(bound_exponent(alpha, beta, d, t))


def optimal_t(alpha: float, beta: float, d: int) -> float | None:
    """The minimizer of the bound term over (0, 1/2), when one exists.

    The stationary points of the term solve the quadratic
    2(2b-a)t^2 + 2(a-2b-d)t + (d+b) = 0.  For beta < -d exactly one root
    falls inside (0, 1/2) and the term there is below 1/2.  For
    -d <= beta < 0 no stationary point is interior and None is returned
    (the term never drops below 1/2).  For 0 < beta < d both roots can be
    interior; the one with the smaller term is returned, without any claim
    that it beats 1/2.
    """
    if alpha <= 0:
        raise InvalidParameterError(f"alpha must be positive, got {alpha}")
    disc = alpha * alpha - 2.0 * alpha * beta + d * d
    if disc < 0:
        return None
    denom = 2.0 * (2.0 * beta - alpha)
    if denom == 0.0:
        return None
    sq = math.sqrt(disc)
    roots = [(2.0 * beta - alpha + d + sq) / denom, (2.0 * beta - alpha + d - sq) / denom]
    interior = [r for r in roots if 0.0 < r < 0.5]
    if not interior:
        return None
    return min(interior, key=lambda r: bound_exponent(alpha, beta, d, r))


@dataclass(frozen=True)
class BoundParams:
    """The (alpha, beta) pairs and t-values feeding the two bound terms."""

    alpha1: float
    beta1: float
    alpha2: float
    beta2: float
    t1: float
    t2: float

    def __post_init__(self):
        if not (0.0 <= self.t1 < 0.5 and 0.0 <= self.t2 < 0.5):
            raise InvalidParameterError("t values must lie in [0, 1/2)")


def bound_params(mu, boundary: QuadraticBoundary) -> tuple[float, float, float, float]:
    """(alpha1, beta1, alpha2, beta2) for the normalized boundary."""
    mu = _as_mu(mu)
    b, c = boundary.normalized()
    d = mu.size
    mm = float(mu @ mu)
    bm = float(b @ mu)
    alpha1 = float(np.dot(b + 2.0 * mu, b + 2.0 * mu)) / 2.0
    beta1 = mm + bm + c
    alpha2 = float(np.dot(b - 2.0 * mu, b - 2.0 * mu)) / 2.0
    beta2 = -mm + bm - c - 2.0 * d
    return alpha1, beta1, alpha2, beta2


def _pick_t(alpha: float, beta: float, d: int, requested: float | None) -> tuple[float, str]:
    if requested is not None:
        if not 0.0 <= requested < 0.5:
            raise InvalidParameterError(f"t must lie in [0, 1/2), got {requested}")
        return requested, "fixed"
    if alpha <= 0:
        return 0.0, "zero"
    t = optimal_t(alpha, beta, d)
    if t is None:
        return 0.0, "zero"
    return t, ("optimal" if beta < -d else "inconclusive")


@dataclass(frozen=True, eq=False)
class AccuracyBoundReport:
    """Everything the accuracy-bound check produces for one configuration."""

    d: int
    mu_norm: float
    clean_tau: float
    mc_tau_pu: float
    mc_tau_se: float
    degenerate: bool
    quad_positive: bool
    p1: float
    p2: float
    bound: float
    conditions_met: bool
    t1: float
    t2: float
    t1_status: str
    t2_status: str
    alpha1: float | None = None
    beta1: float | None = None
    alpha2: float | None = None
    beta2: float | None = None
    n_samples: int = 0

    def lines(self) -> list[str]:
        out = [
            f"d={self.d}",
            f"mu_norm={self.mu_norm:.17g}",
            f"clean_tau={self.clean_tau:.17g}",
            f"mc_tau_pu={self.mc_tau_pu:.17g}",
            f"mc_tau_se={self.mc_tau_se:.17g}",
            f"degenerate={str(self.degenerate).lower()}",
            f"quad_positive={str(self.quad_positive).lower()}",
            f"p1={self.p1:.17g}",
            f"p2={self.p2:.17g}",
            f"bound={self.bound:.17g}",
            f"conditions_met={str(self.conditions_met).lower()}",
        ]
        if self.alpha1 is not None:
            out += [
                f"alpha1={self.alpha1:.17g}",
                f"beta1={self.beta1:.17g}",
                f"alpha2={self.alpha2:.17g}",
                f"beta2={self.beta2:.17g}",
            ]
        out += [
            f"t1={self.t1:.17g}",
            f"t2={self.t2:.17g}",
            f"t1_status={self.t1_status}",
            f"t2_status={self.t2_status}",
            f"n_samples={self.n_samples}",
        ]
        return out


def accuracy_bound_report(mu, transforms: ClassTransform, t1: float | None = None,
                          t2: float | None = None, n: int = 1_000_000,
                          seed: int = 23) -> AccuracyBoundReport:
    """Evaluate the accuracy bound and its conditions for one configuration.

    Reports p1, p2, their sum, whether both strict conditions hold
    (beta1 < -d and beta2 < -d), the Monte-Carlo accuracy of the
    transformed-data boundary on clean data, and the clean closed form.
    For equal class scalings the quadric degenerates to a hyperplane: the
    normalized form does not exist, only the trivial t=0 bound (exactly 1)
    is reported, and the report is flagged.
    """
    mu = _as_mu(mu)
    d = mu.size
    boundary = unlearnable_boundary(mu, transforms)
    clean_tau = clean_accuracy_closed_form(mu)
    mc_tau, mc_se = mc_accuracy(boundary, mu, n, seed)
    common = dict(d=d, mu_norm=float(np.linalg.norm(mu)), clean_tau=clean_tau,
                  mc_tau_pu=mc_tau, mc_tau_se=mc_se, n_samples=n)
    if boundary.degenerate:
        return AccuracyBoundReport(
            degenerate=True, quad_positive=False, p1=0.5, p2=0.5, bound=1.0,
            conditions_met=False, t1=0.0, t2=0.0,
            t1_status="degenerate", t2_status="degenerate", **common,
        )
    alpha1, beta1, alpha2, beta2 = bound_params(mu, boundary)
    t1_val, t1_status = _pick_t(alpha1, beta1, d, t1)
    t2_val, t2_status = _pick_t(alpha2, beta2, d, t2)
    p1 = bound_term(alpha1, beta1, d, t1_val)
    p2 = bound_term(alpha2, beta2, d, t2_val)
    return AccuracyBoundReport(
        degenerate=False, quad_positive=boundary.quad > 0,
        p1=p1, p2=p2, bound=p1 + p2,
        conditions_met=beta1 < -d and beta2 < -d,
        t1=t1_val, t2=t2_val, t1_status=t1_status, t2_status=t2_status,
        alpha1=alpha1, beta1=beta1, alpha2=alpha2, beta2=beta2, **common,
    )


def fit_empirical_boundary(points, labels) -> QuadraticBoundary:
    """Plug-in estimate of the transformed-mixture Bayes boundary.

    Estimates each class's scaling from its mean per-coordinate variance
    and T_y*mu from its sample mean, then assembles the same coefficients
    as :func:`unlearnable_boundary` from the estimates.
    """
    x = np.asarray(points, dtype=np.float64)
    y = np.asarray(labels)
    pos = x[y == 1]
    neg = x[y == -1]
    if len(pos) == 0 or len(neg) == 0:
        raise InvalidParameterError("both classes must be present")
    d = x.shape[1]
    mean_pos = pos.mean(axis=0)
    mean_neg = neg.mean(axis=0)
    lam_pos = math.sqrt(float(pos.var(axis=0).mean()))
    lam_neg = math.sqrt(float(neg.var(axis=0).mean()))
    if lam_pos == 0.0 or lam_neg == 0.0:
        raise InvalidParameterError("a class shows zero variance; cannot estimate its scaling")
    inv_pos = lam_pos**-2.0
    inv_neg = lam_neg**-2.0
    quad = inv_neg - inv_pos
    # class -1 has mean -T_{-1} mu, so T_{-1} mu is estimated by -mean_neg
    linear = 2.0 * (inv_neg * (-mean_neg) + inv_pos * mean_pos)
    const = 2.0 * d * (math.log(lam_neg) - math.log(lam_pos))
    return QuadraticBoundary(quad, linear, const)


def plane_rotation(direction, angle: float) -> np.ndarray:
    """Rotation by ``angle`` in the plane spanned by ``direction`` and one axis.

    Works in any dimension >= 2; the complementary axis is the coordinate
    direction least aligned with ``direction``.
    """
    u = np.asarray(direction, dtype=np.float64)
    norm = np.linalg.norm(u)
    if u.ndim != 1 or u.size < 2 or norm == 0:
        raise InvalidParameterError("direction must be a nonzero vector of dimension >= 2")
    u = u / norm
    axis = int(np.argmin(np.abs(u)))
    v = -u[axis] * u
    v[axis] += 1.0
    v = v / np.linalg.norm(v)
    d = u.size
    uu = np.outer(u, u)
    vv = np.outer(v, v)
    return np.eye(d) + (math.cos(angle) - 1.0) * (uu + vv) + math.sin(angle) * (np.outer(v, u) - np.outer(u, v))


def random_orthogonal(d: int, seed: int) -> np.ndarray:
    """Orthogonal matrix built as a product of seeded Givens rotations."""
    if d < 1:
        raise InvalidParameterError("dimension must be >= 1")
    rng = substream(seed, "ortho")
    out = np.eye(d)
    for i in range(d - 1):
        for j in range(i + 1, d):
            theta = rng.uniform(0.0, 2.0 * math.pi)
            g = np.eye(d)
            g[i, i] = g[j, j] = math.cos(theta)
            g[i, j] = -math.sin(theta)
            g[j, i] = math.sin(theta)
            out = g @ out
    return out


def search_unlearnable_config(mu, lam_pos_grid=(0.7, 0.75, 0.8),
                              lam_neg_grid=(0.5, 0.55, 0.6, 0.65),
                              angle_grid_deg=(120.0, 135.0, 150.0, 165.0, 180.0)) -> ClassTransform:
    """Grid-search a condition-satisfying configuration for the given mean.

    Scans class scalings (keeping lam_neg < lam_pos so the quadric
    coefficient is positive) and a shared plane-rotation angle chosen to
    push b.mu far negative; returns the configuration minimizing p1 + p2
    among those meeting both strict conditions.
    """
    mu = _as_mu(mu)
    if np.linalg.norm(mu) == 0:
        raise InvalidParameterError("mu must be nonzero for an unlearnable configuration to exist")
    d = mu.size
    best = None
    best_bound = math.inf
    for lam_pos in lam_pos_grid:
        for lam_neg in lam_neg_grid:
            if lam_neg >= lam_pos:
                continue
            for angle in angle_grid_deg:
                rot = plane_rotation(mu, math.radians(angle))
                candidate = ClassTransform(lam_pos, rot, lam_neg, rot)
                boundary = unlearnable_boundary(mu, candidate)
                alpha1, beta1, alpha2, beta2 = bound_params(mu, boundary)
                if not (beta1 < -d and beta2 < -d):
                    continue
                t1, _ = _pick_t(alpha1, beta1, d, None)
                t2, _ = _pick_t(alpha2, beta2, d, None)
                total = bound_term(alpha1, beta1, d, t1) + bound_term(alpha2, beta2, d, t2)
                if total < best_bound:
                    best = candidate
                    best_bound = total
    if best is None:
        raise InvalidParameterError(
            "no configuration on the searched grid satisfies the unlearnability conditions; "
            "try a larger ||mu||"
        )
    return best


# Regression targets for the bound exponent at d=3, rounded to three
# decimals: the first block fixes alpha=1/2, the second alpha=1/3, with
# beta stepping over -4..-14 and t in {0.3, 0.4}.
BOUND_EXPONENT_REFERENCE: dict[tuple[float, float, float], float] = {
    (0.5, -4.0, 0.3): 0.287, (0.5, -4.0, 0.4): 1.214,
    (0.5, -6.0, 0.3): -0.313, (0.5, -6.0, 0.4): 0.414,
    (0.5, -8.0, 0.3): -0.913, (0.5, -8.0, 0.4): -0.386,
    (0.5, -10.0, 0.3): -1.513, (0.5, -10.0, 0.4): -1.186,
    (0.5, -12.0, 0.3): -2.113, (0.5, -12.0, 0.4): -1.986,
    (0.5, -14.0, 0.3): -2.713, (0.5, -14.0, 0.4): -2.786,
    (1.0 / 3.0, -4.0, 0.3): 0.249, (1.0 / 3.0, -4.0, 0.4): 1.081,
    (1.0 / 3.0, -6.0, 0.3): -0.351, (1.0 / 3.0, -6.0, 0.4): 0.281,
    (1.0 / 3.0, -8.0, 0.3): -0.951, (1.0 / 3.0, -8.0, 0.4): -0.519,
    (1.0 / 3.0, -10.0, 0.3): -1.551, (1.0 / 3.0, -10.0, 0.4): -1.319,
    (1.0 / 3.0, -12.0, 0.3): -2.151, (1.0 / 3.0, -12.0, 0.4): -2.119,
    (1.0 / 3.0, -14.0, 0.3): -2.751, (1.0 / 3.0, -14.0, 0.4): -2.919,
}
