"""
Rank selection from the source singular values.

Three strategies are available:

- FixedRank: the caller already knows r.
- ScreeNot: adaptive optimal hard threshold. The top-k singular values are
  replaced by an imputed noise bulk, the threshold T solves
  T·D'(T)/D(T) = -4 for the D-transform of that bulk, and the rank is the
  number of singular values above T.
- GapFallback: the position of the largest ratio s_i / s_{i+1} with i <= k.
"""
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from app.config import settings
from app.exceptions import RankOutOfRange, RankZeroSelected
from app.logging_config import setup_logging
from app.services.matrix_core import dense, singular_values
from app.utils.validators import require_rank

logger = setup_logging()

# Target value of T·D'(T)/D(T) at the optimal threshold
SCREENOT_LEVEL = -4.0


@dataclass(frozen=True)
class FixedRank:
    rank: int

    name = "fixed"


@dataclass(frozen=True)
class ScreeNot:
    name = "screenot"


@dataclass(frozen=True)
class GapFallback:
    name = "gap"


RankStrategy = FixedRank | ScreeNot | GapFallback


@dataclass(frozen=True)
class RankSelection:
    """Selected rank plus the quantities that produced it."""

    rank: int
    strategy: str
    upper_bound: int
    threshold: float | None
    singular_values: np.ndarray


def parse_strategy(name: str, rank: int | None = None) -> RankStrategy:
    """
    Build a strategy from its command-line name.

    Raises:
        ValueError: When the name is unknown or a fixed rank is missing
    """
    key = name.lower()
    if key == ScreeNot.name:
        return ScreeNot()
    if key == GapFallback.name:
        return GapFallback()
    if key == FixedRank.name:
        if rank is None:
            raise ValueError("the fixed strategy needs an explicit rank")
        return FixedRank(rank)
    raise ValueError(f"unknown rank strategy {name!r}")


def default_upper_bound(p: int, q: int) -> int:
    """Loose rank upper bound ⌊min(p, q)/3⌋, capped and at least 1."""
    return max(1, min(min(p, q) // 3, settings.RANK_UPPER_BOUND_CAP))


def _zero_floor(s: np.ndarray, shape: tuple[int, int]) -> float:
    return float(s[0]) * max(shape) * np.finfo(float).eps if s.size else 0.0


def _pseudo_noise(s: np.ndarray, k: int) -> np.ndarray:
    """Replace the k leading singular values by an imputed continuation of the bulk."""
    z = s.copy()
    n = s.shape[0]
    if 2 * k + 1 >= n:
        z[:k] = s[k]
        return z

    diff = s[k] - s[2 * k + 1]
    denom = 1.0 - (1.0 / (k + 1)) ** (2.0 / 3.0)
    for i in range(k):
        weight = (1.0 - ((i + 1) / (k + 1)) ** (2.0 / 3.0)) / denom
        z[i] = s[k] + weight * diff
    return z


def _d_transform_ratio(t: float, z: np.ndarray, gamma: float) -> float:
    """T·D'(T)/D(T) for the empirical distribution of z."""
    t2 = t * t
    z2 = z * z
    gap = t2 - z2
    phi = np.mean(t / gap)
    dphi = np.mean(-(t2 + z2) / gap ** 2)

    inner = gamma * phi + (1.0 - gamma) / t
    dinner = gamma * dphi - (1.0 - gamma) / t2
    d = phi * inner
    dd = dphi * inner + phi * dinner
    return t * dd / d


def screenot_threshold(s: np.ndarray, k: int, shape: tuple[int, int]) -> float:
    """
    Optimal adaptive hard threshold for singular values `s` (nonincreasing).

    Args:
        s: All min(p, q) singular values of the matrix
        k: Upper bound on the number of signal components
        shape: (p, q) of the matrix

    Returns:
        Threshold T; singular values above T are retained
    """
    gamma = min(shape) / max(shape)
    z = _pseudo_noise(s, k)
    z_max = float(z.max())
    floor = _zero_floor(s, shape)

    if z_max <= floor:
        # Noise bulk vanished: only exact zeros are noise
        return floor

    def level(t: float) -> float:
        return _d_transform_ratio(t, z, gamma) - SCREENOT_LEVEL

    low = z_max * (1.0 + 1e-9)
    if level(low) >= 0:
        return z_max

    high = 2.0 * z_max
    while level(high) < 0:
        low, high = high, 2.0 * high

    return float(brentq(level, low, high, xtol=1e-12 * z_max, maxiter=500))


def _gap_rank(s: np.ndarray, k: int, floor: float) -> int:
    head = np.where(s[: k + 1] > floor, s[: k + 1], 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = head[:k] / head[1 : k + 1]
    ratios = np.where(np.isnan(ratios), 0.0, ratios)
    if not np.any(ratios > 0):
        return 0
    return int(np.argmax(ratios)) + 1


def select_rank(Y1, upper_bound: int, strategy: RankStrategy) -> RankSelection:
    """
    Select the rank of the source signal.

    Args:
        Y1: Fully observed source matrix
        upper_bound: Loose upper bound k, 1 <= k < min(p, q)
        strategy: FixedRank, ScreeNot or GapFallback

    Returns:
        RankSelection with the selected rank (and the threshold for ScreeNot)

    Raises:
        RankOutOfRange: If the upper bound is outside [1, min(p, q) - 1]
        RankZeroSelected: If no singular value is retained
    """
    a = dense(Y1)
    s = singular_values(a)
    shape = a.shape
    if upper_bound < 1 or upper_bound >= min(shape):
        raise RankOutOfRange(upper_bound, min(shape) - 1)

    threshold = None
    if isinstance(strategy, FixedRank):
        require_rank(strategy.rank, min(shape))
        rank = strategy.rank
    elif isinstance(strategy, ScreeNot):
        threshold = screenot_threshold(s, upper_bound, shape)
        rank = min(int(np.sum(s > threshold)), upper_bound)
    else:
        rank = _gap_rank(s, upper_bound, _zero_floor(s, shape))

    if rank == 0:
        logger.error(f"Rank selection ({strategy.name}) retained no singular value")
        raise RankZeroSelected(threshold if threshold is not None else float(s[0]))

    logger.info(
        f"Selected rank {rank} with strategy={strategy.name}, upper_bound={upper_bound}"
        + (f", threshold={threshold:.6g}" if threshold is not None else "")
    )
    return RankSelection(
        rank=rank,
        strategy=strategy.name,
        upper_bound=upper_bound,
        threshold=threshold,
        singular_values=s,
    )
