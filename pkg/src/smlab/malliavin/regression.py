"""
Nonparametric estimates of g_X(x) = E[Y | X = x] from paired samples.
"""

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np
from scipy.spatial import cKDTree

from ..errors import InvalidParams, TooFewSamples
from ..reports import write_csv
from .functional import GammaSamples

logger = logging.getLogger(__name__)

MIN_SAMPLES = 1000
DEFAULT_BINS = 50
DEFAULT_NEIGHBORS = 200


@dataclass
class RegressionResult:
    """
    Piecewise estimate of E[Y | X]: one value per bin (or per kNN query
    point) with its standard error and sample count.
    """

    method: str
    centers: np.ndarray
    g_hat: np.ndarray
    stderr: np.ndarray
    count: np.ndarray
    edges: Optional[np.ndarray] = None

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.edges is not None:
            idx = np.clip(np.searchsorted(self.edges, x, side="right") - 1, 0, len(self.g_hat) - 1)
            return self.g_hat[idx]
        return np.interp(x, self.centers, self.g_hat)

    def to_rows(self):
        return zip(self.centers, self.g_hat, self.stderr, self.count)

    def export_csv(self, path: str) -> str:
        return write_csv(Path(path), ["bin_center", "g_hat", "stderr", "count"], self.to_rows())


def _binned(x: np.ndarray, y: np.ndarray, bins: int) -> RegressionResult:
    order = np.argsort(x, kind="stable")
    xs, ys = x[order], y[order]
    groups = np.array_split(np.arange(len(xs)), bins)
    centers, g_hat, stderr, count = [], [], [], []
    edges = [-np.inf]
    for k, idx in enumerate(groups):
        yb = ys[idx]
        centers.append(float(np.mean(xs[idx])))
        g_hat.append(float(np.mean(yb)))
        stderr.append(float(np.std(yb, ddof=1) / math.sqrt(len(yb))) if len(yb) > 1 else float("nan"))
        count.append(len(yb))
        if k + 1 < len(groups):
            edges.append(0.5 * (xs[idx[-1]] + xs[groups[k + 1][0]]))
    return RegressionResult(
        method="bins",
        centers=np.array(centers),
        g_hat=np.array(g_hat),
        stderr=np.array(stderr),
        count=np.array(count),
        edges=np.array(edges),
    )


def _knn(x: np.ndarray, y: np.ndarray, points: int, k: int) -> RegressionResult:
    tree = cKDTree(x[:, None])
    query = np.quantile(x, (np.arange(points) + 0.5) / points)
    _, idx = tree.query(query[:, None], k=k)
    yk = y[idx]
    return RegressionResult(
        method="knn",
        centers=query,
        g_hat=yk.mean(axis=1),
        stderr=yk.std(axis=1, ddof=1) / math.sqrt(k),
        count=np.full(points, k),
    )


def conditional_regress(
    samples: GammaSamples,
    method: str = "bins",
    bandwidth_spec: Optional[Dict[str, Any]] = None,
) -> RegressionResult:
    """
    Estimate E[Y | X = x].

    Args:
        samples: Paired (X, Y) draws
        method: "bins" (equal-count bins) or "knn" (k nearest neighbours
            at equally spaced quantiles)
        bandwidth_spec: {"bins": 50} or {"points": 50, "k": 200}

    Raises:
        TooFewSamples: Below 1000 samples
    """
    spec = bandwidth_spec or {}
    n = len(samples)
    if n < MIN_SAMPLES:
        raise TooFewSamples(f"regression needs at least {MIN_SAMPLES} samples, got {n}")
    x = np.asarray(samples.x, dtype=float)
    y = np.asarray(samples.y, dtype=float)
    if method == "bins":
        result = _binned(x, y, int(spec.get("bins", DEFAULT_BINS)))
    elif method == "knn":
        k = min(int(spec.get("k", DEFAULT_NEIGHBORS)), n)
        result = _knn(x, y, int(spec.get("points", DEFAULT_BINS)), k)
    else:
        raise InvalidParams(f"unknown regression method '{method}' (expected bins or knn)")
    logger.debug("conditional_regress: %s with %d groups over %d samples", method, len(result.g_hat), n)
    return result
