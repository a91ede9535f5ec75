"""Soft-margin binary SVM trained by sequential minimal optimization.

The dual problem min 0.5 a'Qa - e'a with 0 <= a <= C and y'a = 0 is solved
by maximal-violating-pair selection: the most violating index from the
'up' set against the most violating from the 'down' set, stopping when the
violation gap falls below the training tolerance. That stopping rule bounds
every KKT residual by the tolerance.

Models keep only the support vectors. Feature standardization is provided
separately because the RBF width is only meaningful on a fixed scale.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, NonConvergenceError

DEFAULT_C = 1.0
DEFAULT_TOL = 1e-3
_BOUND_EPS = 1e-12
_SV_EPS = 1e-10

MODEL_FORMAT_VERSION = 1


# ---------------------------------------------------------------------------
# Kernels
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Kernel:
    """Linear or RBF kernel; sigma is the RBF width."""

    kind: str
    sigma: float | None = None

    def __post_init__(self) -> None:
        if self.kind == "linear":
            if self.sigma is not None:
                raise DataError("linear kernel takes no sigma")
        elif self.kind == "rbf":
            if self.sigma is None or not self.sigma > 0:
                raise DataError(f"rbf kernel needs sigma > 0, got {self.sigma}")
        else:
            raise DataError(f"unknown kernel kind {self.kind!r}")

    @staticmethod
    def linear() -> "Kernel":
        return Kernel("linear")

    @staticmethod
    def rbf(sigma: float) -> "Kernel":
        return Kernel("rbf", float(sigma))


def rbf_kernel(x1: np.ndarray, x2: np.ndarray, sigma: float) -> float:
    """exp(-||x1 - x2||^2 / (2 sigma^2)) for equal-length vectors."""
    a = np.asarray(x1, dtype=np.float64).ravel()
    b = np.asarray(x2, dtype=np.float64).ravel()
    if a.shape[0] != b.shape[0]:
        raise DataError(f"kernel inputs differ in length ({a.shape[0]} vs {b.shape[0]})")
    if not sigma > 0:
        raise DataError(f"sigma must be positive, got {sigma}")
    d = a - b
    return float(np.exp(-(d @ d) / (2.0 * sigma * sigma)))


def kernel_matrix(A: np.ndarray, B: np.ndarray, kernel: Kernel) -> np.ndarray:
    """Pairwise kernel evaluations, rows of A against rows of B."""
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    B = np.atleast_2d(np.asarray(B, dtype=np.float64))
    if A.shape[1] != B.shape[1]:
        raise DataError("feature dimensions differ")
    if kernel.kind == "linear":
        return A @ B.T
    sq = (np.sum(A * A, axis=1)[:, None] + np.sum(B * B, axis=1)[None, :]
          - 2.0 * (A @ B.T))
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-sq / (2.0 * kernel.sigma * kernel.sigma))


# ---------------------------------------------------------------------------
# Feature scaling
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Scaler:
    """Per-feature affine map to zero mean, unit variance on the fit window."""

    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> "Scaler":
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        mean = X.mean(axis=0)
        scale = X.std(axis=0)
        scale = np.where(scale > 0, scale, 1.0)  # constant columns pass through
        return cls(mean, scale)

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        return (X - self.mean) / self.scale


# ---------------------------------------------------------------------------
# Model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TrainReport:
    """Diagnostics from one SMO run; objective_log is the maximized dual."""

    iterations: int
    gap: float
    max_kkt_violation: float
    objective_log: tuple[float, ...] = field(repr=False)


@dataclass(frozen=True)
class SvmModel:
    support_vectors: np.ndarray
    dual_coefs: np.ndarray  # alpha_i * y_i per support vector
    bias: float
    kernel: Kernel
    c: float
    training_tol: float
    report: TrainReport | None = None

    def __post_init__(self) -> None:
        sv = np.atleast_2d(np.asarray(self.support_vectors, dtype=np.float64))
        coefs = np.asarray(self.dual_coefs, dtype=np.float64).ravel()
        object.__setattr__(self, "support_vectors", sv)
        object.__setattr__(self, "dual_coefs", coefs)
        if sv.shape[0] == 0 or coefs.shape[0] == 0:
            raise DataError("a model needs at least one support vector")
        if sv.shape[0] != coefs.shape[0]:
            raise DataError("support vectors and dual coefficients must align")
        if not self.c > 0 or not self.training_tol > 0:
            raise DataError("C and tol must be positive")
        # |dual| = alpha since alpha >= 0
        if np.any(np.abs(coefs) > self.c * (1.0 + 1e-9)):
            raise DataError("dual coefficient exceeds the box constraint")
        if abs(float(coefs.sum())) > self.training_tol:
            raise DataError("dual coefficients do not satisfy the equality constraint")

    @property
    def n_features(self) -> int:
        return int(self.support_vectors.shape[1])


def decision_value(model: SvmModel, x: np.ndarray) -> float | np.ndarray:
    """Sum of dual_coefs * K(sv, x) + bias; vectorized over rows of x."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    if X.shape[1] != model.n_features:
        raise DataError(f"expected {model.n_features} features, got {X.shape[1]}")
    values = kernel_matrix(X, model.support_vectors, model.kernel) @ model.dual_coefs
    values += model.bias
    return float(values[0]) if single else values


def predict(model: SvmModel, x: np.ndarray) -> int | np.ndarray:
    """Sign of the decision value; an exact zero maps to +1."""
    values = decision_value(model, x)
    if np.isscalar(values):
        return 1 if values >= 0 else -1
    return np.where(np.asarray(values) >= 0, 1, -1)


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------


def train_smo(X: np.ndarray, y: np.ndarray, c: float = DEFAULT_C,
              kernel: Kernel | None = None, tol: float = DEFAULT_TOL,
              max_iter: int | None = None) -> SvmModel:
    """Train by maximal-violating-pair SMO; deterministic for a fixed input."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).ravel()
    n = X.shape[0]
    if kernel is None:
        kernel = Kernel.linear()
    if n < 2 or y.shape[0] != n:
        raise DataError("need at least 2 aligned samples")
    if not np.all(np.isfinite(X)):
        raise DataError("features must be finite")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise DataError("labels must be -1 or +1")
    if np.all(y == y[0]):
        raise DataError("training needs both classes")
    if not c > 0 or not tol > 0:
        raise DataError("C and tol must be positive")
    if max_iter is None:
        max_iter = max(20_000, 100 * n)

    K = kernel_matrix(X, X, kernel)
    alpha = np.zeros(n)
    G = -np.ones(n)  # gradient of the dual at alpha = 0
    beps = _BOUND_EPS * max(1.0, c)
    objective_log = []
    iterations = 0
    while True:
        yg = -y * G
        up = ((y > 0) & (alpha < c - beps)) | ((y < 0) & (alpha > beps))
        low = ((y < 0) & (alpha < c - beps)) | ((y > 0) & (alpha > beps))
        if not up.any() or not low.any():
            gap = 0.0
            break
        up_vals = np.where(up, yg, -np.inf)
        low_vals = np.where(low, yg, np.inf)
        i = int(np.argmax(up_vals))
        j = int(np.argmin(low_vals))
        gap = float(up_vals[i] - low_vals[j])
        if gap <= tol:
            break
        if iterations >= max_iter:
            viol = int(np.sum(np.where(up, yg, -np.inf) > low_vals[j] + tol)
                       + np.sum(np.where(low, yg, np.inf) < up_vals[i] - tol))
            raise NonConvergenceError(
                f"SMO failed to converge in {max_iter} iterations; "
                f"{viol} points still violate the pairing tolerance (gap {gap:.3e})",
                iterations=iterations, gradient_norm=gap)
        eta = max(K[i, i] + K[j, j] - 2.0 * K[i, j], 1e-12)
        t = gap / eta
        cap_i = (c - alpha[i]) if y[i] > 0 else alpha[i]
        cap_j = alpha[j] if y[j] > 0 else (c - alpha[j])
        t = min(t, cap_i, cap_j)
        alpha[i] += y[i] * t
        alpha[j] -= y[j] * t
        if t == cap_i:
            alpha[i] = c if y[i] > 0 else 0.0
        if t == cap_j:
            alpha[j] = 0.0 if y[j] > 0 else c
        G += y * t * (K[:, i] - K[:, j])
        iterations += 1
        # maximized dual W = e'a - 0.5 a'Qa = 0.5 (sum(a) - a'G)
        objective_log.append(0.5 * float(alpha.sum() - alpha @ G))

    free = (alpha > beps) & (alpha < c - beps)
    yg = -y * G
    if free.any():
        bias = float(np.mean(yg[free]))
    else:
        hi = np.where(((y > 0) & (alpha < c - beps)) | ((y < 0) & (alpha > beps)),
                      yg, -np.inf)
        lo = np.where(((y < 0) & (alpha < c - beps)) | ((y > 0) & (alpha > beps)),
                      yg, np.inf)
        bias = float((hi.max() + lo.min()) / 2.0)

    margin = G + 1.0 + y * bias  # y_i * f(x_i)
    at_zero = alpha <= beps
    at_c = alpha >= c - beps
    viol = np.where(at_zero, np.maximum(1.0 - margin, 0.0),
                    np.where(at_c, np.maximum(margin - 1.0, 0.0),
                             np.abs(margin - 1.0)))
    report = TrainReport(iterations=iterations, gap=gap,
                         max_kkt_violation=float(viol.max()),
                         objective_log=tuple(objective_log))
    keep = alpha > _SV_EPS
    if not keep.any():
        # converged with an all-zero dual: every point already satisfies KKT
        keep = np.zeros(n, dtype=bool)
        keep[0] = True
    return SvmModel(support_vectors=X[keep], dual_coefs=alpha[keep] * y[keep],
                    bias=bias, kernel=kernel, c=c, training_tol=tol, report=report)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def save_model(path: str, model: SvmModel, scaler: Scaler | None = None) -> None:
    """Versioned flat text file; floats are written round-trip exact."""
    lines = [f"svmmodel {MODEL_FORMAT_VERSION}",
             f"kernel {model.kernel.kind}"]
    if model.kernel.kind == "rbf":
        lines.append(f"sigma {model.kernel.sigma!r}")
    lines.append(f"c {model.c!r}")
    lines.append(f"tol {model.training_tol!r}")
    lines.append(f"bias {model.bias!r}")
    lines.append(f"dim {model.n_features}")
    if scaler is not None:
        lines.append("scaler_mean " + " ".join(repr(float(v)) for v in scaler.mean))
        lines.append("scaler_scale " + " ".join(repr(float(v)) for v in scaler.scale))
    lines.append(f"n_sv {model.support_vectors.shape[0]}")
    for coef, row in zip(model.dual_coefs, model.support_vectors):
        lines.append(" ".join([repr(float(coef))] + [repr(float(v)) for v in row]))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_model(path: str) -> tuple[SvmModel, Scaler | None]:
    with open(path, encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or not lines[0].startswith("svmmodel "):
        raise DataError(f"{path}: not a model file")
    version = lines[0].split()[1]
    if version != str(MODEL_FORMAT_VERSION):
        raise DataError(f"{path}: unsupported model version {version}")
    fields: dict[str, str] = {}
    rows: list[str] = []
    for ln in lines[1:]:
        key, _, rest = ln.partition(" ")
        if key in ("kernel", "sigma", "c", "tol", "bias", "dim",
                   "scaler_mean", "scaler_scale", "n_sv"):
            fields[key] = rest
        else:
            rows.append(ln)
    try:
        kind = fields["kernel"]
        kernel = Kernel.rbf(float(fields["sigma"])) if kind == "rbf" else Kernel.linear()
        dim = int(fields["dim"])
        n_sv = int(fields["n_sv"])
        data = np.array([[float(v) for v in ln.split()] for ln in rows])
        if data.shape != (n_sv, dim + 1):
            raise DataError(f"{path}: expected {n_sv} rows of {dim + 1} values")
        scaler = None
        if "scaler_mean" in fields:
            scaler = Scaler(np.array([float(v) for v in fields["scaler_mean"].split()]),
                            np.array([float(v) for v in fields["scaler_scale"].split()]))
        model = SvmModel(support_vectors=data[:, 1:], dual_coefs=data[:, 0],
                         bias=float(fields["bias"]), kernel=kernel,
                         c=float(fields["c"]), training_tol=float(fields["tol"]))
    except (KeyError, ValueError) as exc:
        raise DataError(f"{path}: malformed model file ({exc})") from None
    return model, scaler
