"""Reproducible Wiener increments.

Draws come from numpy's Philox counter-based generator: 53-bit uniforms
``u = (k + 0.5) / 2**53`` mapped through the inverse normal CDF
(``scipy.special.ndtri``).  The same seed gives the same draws on every
platform, and the first ``K`` draws do not depend on how many are requested.
Draws can also be exchanged as text files::

    # wiener v1 count=<K> seed=<S>
    <one standard-normal draw per line, 17 significant digits>
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import ndtri

from .errors import DomainError

_HEADER_RE = re.compile(r"^#\s*wiener\s+v1\s+count=(\d+)\s+seed=(\S+)\s*$")


def standard_normals(seed: int, count: int) -> np.ndarray:
    bitgen = np.random.Philox(key=int(seed))
    raw = bitgen.random_raw(int(count))
    u = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0 ** -53
    return ndtri(u)


@dataclass(frozen=True)
class WienerPath:
    """Standard-normal draws ``z_k``; the increment of step ``k`` is ``z_k sqrt(dt)``."""

    draws: np.ndarray
    seed: int | None = None
    source: str | None = None

    @classmethod
    def from_seed(cls, seed: int, count: int) -> "WienerPath":
        if seed < 0 or seed >= 2 ** 64:
            raise DomainError(f"seed must be an unsigned 64-bit integer, got {seed}")
        return cls(standard_normals(seed, count), seed=int(seed))

    @classmethod
    def from_file(cls, path) -> "WienerPath":
        path = Path(path)
        with path.open() as fh:
            header = fh.readline()
            m = _HEADER_RE.match(header.strip())
            if not m:
                raise DomainError(f"{path}: missing '# wiener v1 count=<K> seed=<S>' header")
            count = int(m.group(1))
            draws = np.array([float(line) for line in fh if line.strip()], dtype=np.float64)
        if draws.size != count:
            raise DomainError(f"{path}: header announces {count} draws, file holds {draws.size}")
        seed = None if m.group(2) in ("none", "-") else int(m.group(2))
        return cls(draws, seed=seed, source=str(path))

    def to_file(self, path) -> None:
        path = Path(path)
        seed = "none" if self.seed is None else str(self.seed)
        with path.open("w") as fh:
            fh.write(f"# wiener v1 count={self.draws.size} seed={seed}\n")
            for z in self.draws:
                fh.write(f"{z:.17g}\n")

    def __len__(self) -> int:
        return int(self.draws.size)

    def increments(self, dt: float, steps: int) -> np.ndarray:
        if steps > len(self):
            raise DomainError(f"noise path holds {len(self)} draws, {steps} steps requested")
        return self.draws[:steps] * math.sqrt(dt)

    def coarsened(self, factor: int) -> "WienerPath":
        """Same Brownian path sampled at ``factor`` times the step.

        Sums of ``factor`` consecutive increments, rescaled to unit variance.
        """
        n = len(self) // factor
        z = self.draws[: n * factor].reshape(n, factor).sum(axis=1) / math.sqrt(factor)
        return WienerPath(z, seed=self.seed, source=self.source)

    def negated(self) -> "WienerPath":
        return WienerPath(-self.draws, seed=self.seed, source=self.source)
