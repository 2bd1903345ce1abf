"""Model parameters, gain function, initial law and weight-correlation kernels."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

MAX_KERNEL_LAG = 512


@dataclass(frozen=True)
class GainFunction:
    """Logistic gain ``f(x) = 1 / (1 + exp(-slope * x))``, mapping R onto (0, 1)."""

    kind: str = "logistic"
    slope: float = 1.0

    def __call__(self, x):
        return expit(self.slope * np.asarray(x, dtype=float))

    @property
    def lipschitz(self) -> float:
        return self.slope / 4.0


@dataclass(frozen=True)
class InitLaw:
    """Law of the initial potentials ``u_0^j``."""

    kind: str = "gaussian"
    mean: float = 0.0
    std: float = 1.0
    value: float = 0.0

    @classmethod
    def gaussian(cls, mean: float, std: float) -> "InitLaw":
        return cls("gaussian", mean=float(mean), std=float(std))

    @classmethod
    def point_mass(cls, value: float) -> "InitLaw":
        return cls("point_mass", value=float(value), std=0.0)

    @property
    def mu(self) -> float:
        return self.mean if self.kind == "gaussian" else self.value

    @property
    def variance(self) -> float:
        return self.std**2 if self.kind == "gaussian" else 0.0

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        if self.kind == "point_mass":
            return np.full(size, self.value)
        return self.mean + self.std * rng.standard_normal(size)

    def density(self, x):
        if self.kind != "gaussian" or self.std == 0.0:
            raise ValueError(f"{self.kind} law has no Lebesgue density")
        z = (np.asarray(x, dtype=float) - self.mean) / self.std
        return np.exp(-0.5 * z * z) / (self.std * np.sqrt(2.0 * np.pi))


def _geometric_sum(rho: float) -> float:
    # sum over all integers k of rho**|k|
    return (1.0 + rho) / (1.0 - rho)


def _geometric_transform(rho: float, omega):
    return (1.0 - rho * rho) / (1.0 - 2.0 * rho * np.cos(omega) + rho * rho)


def _geometric_radius(rho: float, tol: float) -> int:
    r = abs(rho)
    if r == 0.0:
        return 0
    # smallest R with sum_{|k|>R} r^|k| = 2 r^(R+1) / (1 - r) < tol
    R = int(np.ceil(np.log(tol * (1.0 - r) / 2.0) / np.log(r))) - 1
    return int(min(max(R, 0), MAX_KERNEL_LAG))


@dataclass(frozen=True, eq=False)
class CorrelationKernel:
    """Two-index covariance kernel ``Lambda(k, l)`` of the weight field.

    Three families are supported: ``dirac`` (i.i.d. weights), ``separable_geometric``
    (``a * rho1**|k| * rho2**|l|``) and ``table`` (finite support, centred array).
    """

    kind: str
    j_var: float = 0.0
    a: float = 0.0
    rho1: float = 0.0
    rho2: float = 0.0
    table: np.ndarray | None = field(default=None, repr=False)

    @classmethod
    def dirac(cls, j_var: float) -> "CorrelationKernel":
        return cls("dirac", j_var=float(j_var))

    @classmethod
    def separable_geometric(cls, a: float, rho1: float, rho2: float) -> "CorrelationKernel":
        return cls("separable_geometric", a=float(a), rho1=float(rho1), rho2=float(rho2))

    @classmethod
    def from_table(cls, table) -> "CorrelationKernel":
        arr = np.array(table, dtype=float, ndmin=2)
        if arr.ndim != 2 or arr.shape[0] % 2 == 0 or arr.shape[1] % 2 == 0:
            raise ValueError("table kernel needs a 2-D array with odd side lengths")
        arr.setflags(write=False)
        return cls("table", table=arr)

    def violations(self) -> list[str]:
        out = []
        if self.kind == "dirac":
            if not self.j_var >= 0.0:
                out.append("kernel.j_var must be >= 0")
        elif self.kind == "separable_geometric":
            if not self.a > 0.0:
                out.append("kernel.a must be > 0")
            for name in ("rho1", "rho2"):
                if not -1.0 < getattr(self, name) < 1.0:
                    out.append(f"kernel.{name} must lie in (-1, 1)")
        elif self.kind == "table":
            if self.table is None or not np.all(np.isfinite(self.table)):
                out.append("kernel.table must be a finite array")
        else:
            out.append(f"unknown kernel kind {self.kind!r}")
        return out

    @property
    def half_widths(self) -> tuple[int, int]:
        return self.table.shape[0] // 2, self.table.shape[1] // 2

    def evaluate(self, k, l):
        k = np.asarray(k)
        l = np.asarray(l)
        if self.kind == "dirac":
            return np.where((k == 0) & (l == 0), self.j_var, 0.0)
        if self.kind == "separable_geometric":
            return self.a * np.power(self.rho1, np.abs(k)) * np.power(self.rho2, np.abs(l))
        p, q = self.half_widths
        inside = (np.abs(k) <= p) & (np.abs(l) <= q)
        kk = np.clip(k + p, 0, 2 * p)
        ll = np.clip(l + q, 0, 2 * q)
        return np.where(inside, self.table[kk, ll], 0.0)

    @property
    def lambda_sum(self) -> float:
        if self.kind == "dirac":
            return self.j_var
        if self.kind == "separable_geometric":
            return self.a * _geometric_sum(self.rho1) * _geometric_sum(self.rho2)
        return float(self.table.sum())

    @property
    def lambda_abs_sum(self) -> float:
        if self.kind == "dirac":
            return abs(self.j_var)
        if self.kind == "separable_geometric":
            return abs(self.a) * _geometric_sum(abs(self.rho1)) * _geometric_sum(abs(self.rho2))
        return float(np.abs(self.table).sum())

    def fourier(self, omega, phi):
        """``sum_{k,l} Lambda(k, l) exp(-i (k omega + l phi))`` (real for symmetric kernels)."""
        omega = np.asarray(omega, dtype=float)
        phi = np.asarray(phi, dtype=float)
        if self.kind == "dirac":
            return np.full(np.broadcast(omega, phi).shape, self.j_var)
        if self.kind == "separable_geometric":
            return (
                self.a
                * _geometric_transform(self.rho1, omega)
                * _geometric_transform(self.rho2, phi)
            )
        p, q = self.half_widths
        ks = np.arange(-p, p + 1)
        ls = np.arange(-q, q + 1)
        ek = np.exp(-1j * np.multiply.outer(omega, ks))
        el = np.exp(-1j * np.multiply.outer(phi, ls))
        val = np.einsum("...k,kl,...l->...", ek, self.table, el)
        return val.real

    def row_sum(self, k):
        """``sum_l Lambda(k, l)`` over all integers l."""
        k = np.asarray(k)
        if self.kind == "dirac":
            return np.where(k == 0, self.j_var, 0.0)
        if self.kind == "separable_geometric":
            return self.a * np.power(self.rho1, np.abs(k)) * _geometric_sum(self.rho2)
        p, _ = self.half_widths
        rows = self.table.sum(axis=1)
        return np.where(np.abs(k) <= p, rows[np.clip(k + p, 0, 2 * p)], 0.0)

    def extent(self, tol: float = 1e-12) -> tuple[int, int]:
        """Lag radii beyond which the kernel's absolute tail mass is below ``tol``."""
        if self.kind == "dirac":
            return 0, 0
        if self.kind == "separable_geometric":
            return _geometric_radius(self.rho1, tol), _geometric_radius(self.rho2, tol)
        return self.half_widths

    def torus_matrix(self, n: int) -> np.ndarray:
        """``Lambda(a mod V_n, b mod V_n)`` as an N x N array in FFT (wrap-around) order."""
        lags = wrap_lags(n)
        return self.evaluate(lags[:, None], lags[None, :]).astype(float)


def wrap_lags(n: int) -> np.ndarray:
    """Signed lag represented by each FFT-order index 0..N-1, i.e. ``a mod V_n``."""
    N = 2 * n + 1
    return (np.arange(N) + n) % N - n


@dataclass(frozen=True)
class ModelParams:
    n: int
    T: int
    gamma: float = 0.5
    sigma: float = 1.0
    theta_bar: float = 0.0
    theta_std: float = 0.0
    j_bar: float = 1.0
    gain: GainFunction = GainFunction()
    init_law: InitLaw | None = None

    def __post_init__(self):
        if self.init_law is None:
            object.__setattr__(self, "init_law", InitLaw.gaussian(0.0, self.sigma))

    @property
    def N(self) -> int:
        return 2 * self.n + 1

    def replace(self, **changes) -> "ModelParams":
        from dataclasses import replace

        return replace(self, **changes)


def validate_params(p: ModelParams) -> list[dict]:
    """Every violated invariant of ``p`` as ``{"field": ..., "message": ...}``."""
    out = []

    def bad(name, msg):
        out.append({"field": name, "message": msg})

    if not isinstance(p.n, (int, np.integer)) or p.n < 0:
        bad("n", f"n must be a nonnegative integer, got {p.n!r}")
    if not isinstance(p.T, (int, np.integer)) or p.T < 1:
        bad("T", f"T must be a positive integer, got {p.T!r}")
    if not 0.0 <= p.gamma < 1.0:
        bad("gamma", f"gamma must lie in [0, 1), got {p.gamma!r}")
    if not p.sigma > 0.0:
        bad("sigma", f"sigma must be > 0, got {p.sigma!r}")
    if not p.theta_std >= 0.0:
        bad("theta_std", f"theta_std must be >= 0, got {p.theta_std!r}")
    for name in ("theta_bar", "j_bar"):
        if not np.isfinite(getattr(p, name)):
            bad(name, f"{name} must be finite")
    if p.gain.kind != "logistic" or not p.gain.slope > 0.0:
        bad("gain", "gain must be logistic with slope > 0")
    law = p.init_law
    if law.kind not in ("gaussian", "point_mass"):
        bad("init_law", f"unknown init law {law.kind!r}")
    elif law.kind == "gaussian" and not law.std >= 0.0:
        bad("init_law", "gaussian init law needs std >= 0")
    return out


def kernel_eval(K: CorrelationKernel, k: int, l: int) -> float:
    return float(K.evaluate(k, l))


def kernel_fourier(K: CorrelationKernel, omega: float, phi: float) -> float:
    return float(K.fourier(omega, phi))
