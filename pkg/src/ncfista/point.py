"""Dense real iterates shared by all solvers and problem families.

A point is a small tuple of float64 arrays: a single vector, a single
matrix, or a pair of matrices (for factorization problems).  Keeping one
container lets every solver run unchanged across problem families; the
inner product and norm are the flat Euclidean/Frobenius ones over all
blocks.
"""

from __future__ import annotations

import numpy as np


class Point:
    """One or two dense real arrays with strict shape discipline.

    Every entry must be finite, and arithmetic only combines points whose
    block shapes agree exactly.
    """

    __slots__ = ("blocks",)

    def __init__(self, blocks):
        bs = tuple(np.asarray(b, dtype=float) for b in blocks)
        if not 1 <= len(bs) <= 2:
            raise ValueError(f"expected 1 or 2 blocks, got {len(bs)}")
        for b in bs:
            if b.ndim not in (1, 2):
                raise ValueError(f"blocks must be 1-D or 2-D, got ndim={b.ndim}")
            if not np.isfinite(b).all():
                raise ValueError("point entries must be finite")
        self.blocks = bs

    @classmethod
    def vector(cls, data) -> "Point":
        arr = np.atleast_1d(np.asarray(data, dtype=float))
        if arr.ndim != 1:
            raise ValueError("vector points need 1-D data")
        return cls((arr,))

    @classmethod
    def matrix(cls, data) -> "Point":
        arr = np.asarray(data, dtype=float)
        if arr.ndim != 2:
            raise ValueError("matrix points need 2-D data")
        return cls((arr,))

    @classmethod
    def pair(cls, left, right) -> "Point":
        a = np.asarray(left, dtype=float)
        b = np.asarray(right, dtype=float)
        if a.ndim != 2 or b.ndim != 2:
            raise ValueError("pair points need two 2-D blocks")
        return cls((a, b))

    @property
    def shape(self) -> tuple:
        return tuple(b.shape for b in self.blocks)

    def _check_same_shape(self, other: "Point") -> None:
        if not isinstance(other, Point):
            raise TypeError(f"expected Point, got {type(other).__name__}")
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch: {self.shape} vs {other.shape}")

    def __add__(self, other: "Point") -> "Point":
        self._check_same_shape(other)
        return Point(tuple(a + b for a, b in zip(self.blocks, other.blocks)))

    def __sub__(self, other: "Point") -> "Point":
        self._check_same_shape(other)
        return Point(tuple(a - b for a, b in zip(self.blocks, other.blocks)))

    def __neg__(self) -> "Point":
        return Point(tuple(-a for a in self.blocks))

    def __mul__(self, scalar) -> "Point":
        s = float(scalar)
        return Point(tuple(s * a for a in self.blocks))

    __rmul__ = __mul__

    def inner(self, other: "Point") -> float:
        self._check_same_shape(other)
        return float(sum(np.vdot(a, b) for a, b in zip(self.blocks, other.blocks)))

    def norm(self) -> float:
        return float(np.sqrt(sum(float(np.vdot(a, a)) for a in self.blocks)))

    def copy(self) -> "Point":
        return Point(tuple(a.copy() for a in self.blocks))

    def ravel(self) -> np.ndarray:
        """Flatten all blocks into one 1-D array (copy)."""
        return np.concatenate([b.ravel() for b in self.blocks])

    @classmethod
    def unravel(cls, like: "Point", flat) -> "Point":
        """Rebuild a point with the shapes of ``like`` from a flat array."""
        flat = np.asarray(flat, dtype=float)
        sizes = [b.size for b in like.blocks]
        if flat.size != sum(sizes):
            raise ValueError(f"flat size {flat.size} does not match {sum(sizes)}")
        out, start = [], 0
        for b in like.blocks:
            out.append(flat[start : start + b.size].reshape(b.shape))
            start += b.size
        return cls(tuple(out))

    def __repr__(self) -> str:
        kinds = "x".join(str(s) for s in self.shape)
        return f"Point(shape={kinds}, norm={self.norm():.6g})"
