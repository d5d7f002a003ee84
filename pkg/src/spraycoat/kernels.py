"""Base kernel bank, Gram matrices, and the weighted combined kernel.

The default bank holds ten kernels: linear, polynomial of degree 2 and 3,
and Gaussian kernels with seven variance values from 0.05 to 0.35. The
combined kernel is a non-negative linear combination of the base Gram
matrices, which keeps it positive semi-definite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_GAUSSIAN_SIGMA2 = (0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35)
DEFAULT_POLY_DEGREES = (1, 2, 3)

WEIGHT_NORM_TOL = 1e-9


class KernelError(ValueError):
    """Invalid kernel parameters or mismatched operands."""


@dataclass(frozen=True)
class KernelSpec:
    """A single base kernel: 'linear', 'polynomial' (degree), or 'gaussian' (sigma2)."""

    kind: str
    degree: int = 0
    sigma2: float = 0.0

    def __post_init__(self):
        if self.kind == "linear":
            pass
        elif self.kind == "polynomial":
            if int(self.degree) < 1:
                raise KernelError(f"polynomial degree must be >= 1, got {self.degree}")
        elif self.kind == "gaussian":
            if not self.sigma2 > 0:
                raise KernelError(f"gaussian sigma2 must be > 0, got {self.sigma2}")
        else:
            raise KernelError(f"unknown kernel kind {self.kind!r}")

    @property
    def is_default_family(self) -> bool:
        """True for the kernel families used by the default bank."""
        if self.kind == "polynomial":
            return self.degree in (1, 2, 3)
        return True

    def label(self) -> str:
        if self.kind == "linear":
            return "linear"
        if self.kind == "polynomial":
            return f"poly{self.degree}"
        return f"gauss{self.sigma2:g}"

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "polynomial":
            d["degree"] = int(self.degree)
        elif self.kind == "gaussian":
            d["sigma2"] = float(self.sigma2)
        return d

    @staticmethod
    def from_dict(d: dict) -> "KernelSpec":
        return KernelSpec(
            kind=d["kind"],
            degree=int(d.get("degree", 0)),
            sigma2=float(d.get("sigma2", 0.0)),
        )


def linear() -> KernelSpec:
    return KernelSpec("linear")


def polynomial(degree: int) -> KernelSpec:
    return KernelSpec("polynomial", degree=degree)


def gaussian(sigma2: float) -> KernelSpec:
    return KernelSpec("gaussian", sigma2=sigma2)


@dataclass(frozen=True)
class KernelBank:
    """Ordered, distinct collection of base kernels."""

    specs: tuple[KernelSpec, ...]

    def __post_init__(self):
        if len(self.specs) < 1:
            raise KernelError("kernel bank must hold at least one kernel")
        if len(set(self.specs)) != len(self.specs):
            raise KernelError("kernel bank entries must be distinct")

    def __len__(self) -> int:
        return len(self.specs)

    @property
    def size(self) -> int:
        return len(self.specs)

    def to_dict(self) -> list[dict]:
        return [s.to_dict() for s in self.specs]

    @staticmethod
    def from_dict(items: list[dict]) -> "KernelBank":
        return KernelBank(tuple(KernelSpec.from_dict(d) for d in items))


def default_bank() -> KernelBank:
    """Linear, polynomial deg 2/3, and seven Gaussian kernels (M = 10)."""
    specs = [linear(), polynomial(2), polynomial(3)]
    specs += [gaussian(s2) for s2 in DEFAULT_GAUSSIAN_SIGMA2]
    return KernelBank(tuple(specs))


@dataclass(frozen=True)
class KernelWeights:
    """Non-negative combination weights with an lp-norm budget of 1."""

    gamma: tuple[float, ...]
    p: float

    def __post_init__(self):
        if self.p < 1:
            raise KernelError(f"p must be >= 1, got {self.p}")
        g = np.asarray(self.gamma, dtype=float)
        if np.any(g < 0):
            raise KernelError("kernel weights must be non-negative")
        if lp_norm(g, self.p) > 1 + WEIGHT_NORM_TOL:
            raise KernelError(f"||gamma||_{self.p} exceeds 1")

    @property
    def as_array(self) -> np.ndarray:
        return np.asarray(self.gamma, dtype=float)

    @staticmethod
    def uniform(m: int, p: float) -> "KernelWeights":
        return KernelWeights(tuple([1.0 / m] * m), p)


def lp_norm(gamma: np.ndarray, p: float) -> float:
    """||gamma||_p, computed in log space so huge p does not overflow."""
    g = np.abs(np.asarray(gamma, dtype=float))
    top = g.max(initial=0.0)
    if top == 0.0:
        return 0.0
    # factor out the max: ||g||_p = top * (sum (g/top)^p)^(1/p)
    scaled = g / top
    return float(top * np.sum(scaled**p) ** (1.0 / p))


def kernel_eval(spec: KernelSpec, x: np.ndarray, z: np.ndarray) -> float:
    """Evaluate one base kernel on a pair of (standardized) feature vectors."""
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    if x.shape != z.shape or x.ndim != 1 or x.shape[0] < 1:
        raise KernelError(f"dimension mismatch: {x.shape} vs {z.shape}")
    if spec.kind == "linear":
        return float(x @ z)
    if spec.kind == "polynomial":
        return float((x @ z + 1.0) ** spec.degree)
    d2 = float(np.sum((x - z) ** 2))
    return float(np.exp(-d2 / (2.0 * spec.sigma2)))


def gram_matrix(spec: KernelSpec, X: np.ndarray, Z: np.ndarray | None = None) -> np.ndarray:
    """Gram matrix G[i, j] = K(X[i], Z[j]); Z defaults to X.

    With Z omitted the result is symmetric by construction.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    symmetric = Z is None
    Z = X if symmetric else np.atleast_2d(np.asarray(Z, dtype=float))
    if X.shape[1] != Z.shape[1]:
        raise KernelError(f"dimension mismatch: {X.shape[1]} vs {Z.shape[1]}")
    if spec.kind == "linear":
        G = X @ Z.T
    elif spec.kind == "polynomial":
        G = (X @ Z.T + 1.0) ** spec.degree
    else:
        sq = np.sum(X**2, axis=1)[:, None] + np.sum(Z**2, axis=1)[None, :] - 2.0 * (X @ Z.T)
        np.maximum(sq, 0.0, out=sq)
        G = np.exp(-sq / (2.0 * spec.sigma2))
    if symmetric:
        G = 0.5 * (G + G.T)
    return G


def bank_grams(bank: KernelBank, X: np.ndarray, Z: np.ndarray | None = None) -> list[np.ndarray]:
    """Precompute one Gram matrix per bank entry (the base Grams never change)."""
    return [gram_matrix(spec, X, Z) for spec in bank.specs]


def combined_kernel(
    bank: KernelBank, weights: KernelWeights, grams: list[np.ndarray]
) -> np.ndarray:
    """Weighted sum of the precomputed base Grams."""
    if len(grams) != bank.size or len(weights.gamma) != bank.size:
        raise KernelError(
            f"bank size {bank.size} does not match {len(grams)} grams / "
            f"{len(weights.gamma)} weights"
        )
    K = np.zeros_like(grams[0])
    for g_m, G in zip(weights.gamma, grams):
        if g_m != 0.0:
            K += g_m * G
    return K
