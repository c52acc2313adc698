"""Hessian-vector products on analytic reference models.

Two closed-form model families make second-order direction math verifiable
without autodiff:

* :class:`Quadratic` -- loss(theta) = 0.5 theta'A theta + b'theta, so the
  Hessian is the constant matrix A and H v = A v for any theta.
* :class:`LogisticPoint` -- binary cross-entropy of a single labelled point,
  with H = s(1-s) x x' at s = sigmoid(theta'x).

The finite-difference oracle is the central difference of the gradient along
v, (grad(theta + eps v) - grad(theta - eps v)) / (2 eps). Its interior runs
in extended precision so the oracle stays an order of magnitude more accurate
than float64 round-off would allow at small eps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

DEFAULT_EPSILON = 1e-5


def _check_dim(name: str, vec: np.ndarray, dim: int) -> np.ndarray:
    vec = np.asarray(vec)
    if vec.shape != (dim,):
        raise ParameterError(f"dimension mismatch: {name} has shape {vec.shape}, expected ({dim},)")
    return vec


class AnalyticModel:
    """Differentiable loss with closed-form gradient and Hessian-vector product.

    ``grad`` and ``hvp`` compute in the dtype of ``theta`` so callers may
    evaluate in extended precision.
    """

    dim: int

    def loss(self, theta: np.ndarray) -> float:
        raise NotImplementedError

    def grad(self, theta: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def hvp(self, theta: np.ndarray, v: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class Quadratic(AnalyticModel):
    """loss(theta) = 0.5 theta'A theta + b'theta with symmetric A."""

    def __init__(self, a: np.ndarray, b: np.ndarray):
        a = np.asarray(a, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ParameterError(f"A must be square, got shape {a.shape}")
        if np.max(np.abs(a - a.T)) >= 1e-12:
            raise ParameterError("A must be symmetric (max |A - A'| >= 1e-12)")
        if b.shape != (a.shape[0],):
            raise ParameterError(f"b has shape {b.shape}, expected ({a.shape[0]},)")
        self.a = a
        self.b = b
        self.dim = a.shape[0]

    def loss(self, theta: np.ndarray) -> float:
        theta = _check_dim("theta", theta, self.dim)
        return float(0.5 * theta @ self.a @ theta + self.b @ theta)

    def grad(self, theta: np.ndarray) -> np.ndarray:
        theta = _check_dim("theta", theta, self.dim)
        return self.a.astype(theta.dtype) @ theta + self.b.astype(theta.dtype)

    def hvp(self, theta: np.ndarray, v: np.ndarray) -> np.ndarray:
        _check_dim("theta", theta, self.dim)
        v = _check_dim("v", v, self.dim)
        return self.a.astype(v.dtype) @ v


class LogisticPoint(AnalyticModel):
    """Binary cross-entropy of one point x with label y under sigmoid(theta'x)."""

    def __init__(self, x: np.ndarray, y: int):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 1:
            raise ParameterError(f"x must be 1-d, got shape {x.shape}")
        if y not in (0, 1):
            raise ParameterError(f"y must be 0 or 1, got {y}")
        self.x = x
        self.y = int(y)
        self.dim = x.shape[0]

    def _s(self, theta: np.ndarray):
        z = self.x.astype(theta.dtype) @ theta
        return 1.0 / (1.0 + np.exp(-z))

    def loss(self, theta: np.ndarray) -> float:
        theta = _check_dim("theta", theta, self.dim)
        z = float(self.x @ theta)
        # softplus(z) - y*z, stable for large |z|
        return float(np.logaddexp(0.0, z) - self.y * z)

    def grad(self, theta: np.ndarray) -> np.ndarray:
        theta = _check_dim("theta", theta, self.dim)
        s = self._s(theta)
        return (s - self.y) * self.x.astype(theta.dtype)

    def hvp(self, theta: np.ndarray, v: np.ndarray) -> np.ndarray:
        theta = _check_dim("theta", theta, self.dim)
        v = _check_dim("v", v, self.dim)
        s = self._s(theta)
        x = self.x.astype(theta.dtype)
        return s * (1.0 - s) * (x @ v) * x


def hvp_finite_difference(
    model: AnalyticModel,
    theta: np.ndarray,
    v: np.ndarray,
    epsilon: float = DEFAULT_EPSILON,
) -> np.ndarray:
    """Central-difference estimate of H(theta) v.

    The two gradient evaluations run in ``np.longdouble`` before the
    difference is taken, which keeps cancellation error well below the
    analytic-vs-oracle tolerances even at epsilon = 1e-6.
    """
    if not (epsilon > 0):
        raise ParameterError(f"epsilon must be > 0, got {epsilon}")
    theta = _check_dim("theta", np.asarray(theta), model.dim).astype(np.longdouble)
    v = _check_dim("v", np.asarray(v), model.dim).astype(np.longdouble)
    eps = np.longdouble(epsilon)
    g_plus = model.grad(theta + eps * v)
    g_minus = model.grad(theta - eps * v)
    return ((g_plus - g_minus) / (2.0 * eps)).astype(np.float64)


def sample_direction(
    model: AnalyticModel, theta: np.ndarray, v: np.ndarray | None = None
) -> np.ndarray:
    """Second-order sample direction d = H(theta) v.

    When ``v`` is omitted it defaults to the model's own gradient at theta,
    so d = H g: the curvature-adjusted steepest-ascent direction.
    """
    theta = np.asarray(theta, dtype=np.float64)
    if v is None:
        v = model.grad(theta)
    return np.asarray(model.hvp(theta, np.asarray(v, dtype=np.float64)), dtype=np.float64)


@dataclass(frozen=True)
class HvpReport:
    """Result of one analytic-vs-finite-difference comparison."""

    model_kind: str
    epsilon: float
    analytic: np.ndarray
    finite_difference: np.ndarray
    max_abs_error: float

    @property
    def relative_error(self) -> float:
        scale = max(1.0, float(np.max(np.abs(self.analytic))))
        return self.max_abs_error / scale


def verify_hvp(
    model: AnalyticModel,
    theta: np.ndarray,
    v: np.ndarray,
    epsilon: float = DEFAULT_EPSILON,
) -> HvpReport:
    """Compare the analytic HVP against the finite-difference oracle."""
    analytic = np.asarray(model.hvp(np.asarray(theta, dtype=np.float64), np.asarray(v, dtype=np.float64)), dtype=np.float64)
    fd = hvp_finite_difference(model, theta, v, epsilon)
    err = float(np.max(np.abs(analytic - fd)))
    kind = type(model).__name__
    return HvpReport(kind, epsilon, analytic, fd, err)


def run_verification(trials: int = 200, seed: int = 0) -> tuple[list[HvpReport], bool]:
    """Random verification sweep over both model families.

    Quadratics are checked at log-uniform epsilon in [1e-6, 1e-2] against an
    absolute 1e-10 tolerance; logistic points at epsilon 1e-5 against a 1e-6
    relative tolerance.
    """
    rng = np.random.default_rng(seed)
    reports: list[HvpReport] = []
    ok = True
    for _ in range(trials):
        dim = int(rng.integers(2, 9))
        m = rng.normal(size=(dim, dim))
        model_q = Quadratic((m + m.T) / 2.0, rng.normal(size=dim))
        eps = float(10.0 ** rng.uniform(-6, -2))
        rep = verify_hvp(model_q, rng.normal(size=dim), rng.normal(size=dim), eps)
        ok = ok and rep.max_abs_error < 1e-10
        reports.append(rep)

        model_l = LogisticPoint(rng.normal(size=dim), int(rng.integers(0, 2)))
        rep = verify_hvp(model_l, rng.normal(size=dim), rng.normal(size=dim), 1e-5)
        ok = ok and rep.relative_error < 1e-6
        reports.append(rep)
    return reports, ok
