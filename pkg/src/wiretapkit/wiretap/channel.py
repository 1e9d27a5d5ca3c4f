"""Discrete memoryless wiretap channels ``p_{YZ|X}``."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..prob import TOL, JointPmf, Pmf


class WiretapChannel:
    """Joint kernel ``kernel[x, y, z] = p(y, z | x)``.

    Rows are renormalised when they drift from 1 by less than ``TOL`` and
    rejected otherwise.
    """

    def __init__(self, kernel, name: str = "custom"):
        k = np.array(kernel, dtype=float)
        if k.ndim != 3 or min(k.shape) < 1:
            raise ValueError("kernel must have shape (|X|, |Y|, |Z|)")
        if np.any(k < 0) or not np.all(np.isfinite(k)):
            raise ValueError("kernel entries must be finite and nonnegative")
        rows = k.sum(axis=(1, 2))
        bad = np.abs(rows - 1) > TOL
        if np.any(bad):
            raise ValueError(f"kernel rows for x in {np.flatnonzero(bad).tolist()} do not sum to 1")
        k /= rows[:, None, None]
        k.setflags(write=False)
        self.kernel = k
        self.name = name

    @property
    def x_size(self) -> int:
        return self.kernel.shape[0]

    @property
    def y_size(self) -> int:
        return self.kernel.shape[1]

    @property
    def z_size(self) -> int:
        return self.kernel.shape[2]

    @property
    def p_y_given_x(self) -> np.ndarray:
        return self.kernel.sum(axis=2)

    @property
    def p_z_given_x(self) -> np.ndarray:
        return self.kernel.sum(axis=1)

    def joint(self, p_x: Pmf) -> JointPmf:
        """``p(x, y, z)`` for input law ``p_x``."""
        if p_x.alphabet_size != self.x_size:
            raise ValueError("input law does not match the channel input alphabet")
        return JointPmf(p_x.probs[:, None, None] * self.kernel)

    def transmit(self, x, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        """Pass codewords through the channel by per-symbol inverse CDF."""
        x = np.asarray(x, dtype=np.int64)
        cdf = np.cumsum(self.kernel.reshape(self.x_size, -1), axis=1)
        cdf[:, -1] = 1.0
        draws = rng.random(x.shape)
        rows = cdf[x]
        idx = (draws[..., None] >= rows).sum(axis=-1)
        idx = np.minimum(idx, rows.shape[-1] - 1)
        return idx // self.z_size, idx % self.z_size

    def __repr__(self) -> str:
        return f"WiretapChannel({self.name}, X={self.x_size}, Y={self.y_size}, Z={self.z_size})"


def degraded_bsc(p1: float, p2: float) -> WiretapChannel:
    """``Y = X + N1``, ``Z = Y + N'`` with ``p2 = p1 * (1 - p') + (1 - p1) * p'``."""
    if not 0 <= p1 <= p2 <= 0.5 or p1 == 0.5:
        raise ValueError("need 0 <= p1 <= p2 <= 1/2 and p1 < 1/2")
    pp = (p2 - p1) / (1 - 2 * p1)
    k = np.zeros((2, 2, 2))
    for x in range(2):
        for y in range(2):
            py = 1 - p1 if y == x else p1
            for z in range(2):
                k[x, y, z] = py * (1 - pp if z == y else pp)
    return WiretapChannel(k, f"bsc {p1} {p2}")


def degraded_bec(e1: float, e2: float) -> WiretapChannel:
    """Erasure pair; symbol 2 is the erasure. Eve sees Bob's output erased
    further with probability ``(e2 - e1) / (1 - e1)``."""
    if not 0 <= e1 <= e2 <= 1 or e1 == 1:
        raise ValueError("need 0 <= e1 <= e2 <= 1 and e1 < 1")
    ee = (e2 - e1) / (1 - e1)
    k = np.zeros((2, 3, 3))
    for x in range(2):
        k[x, x, x] = (1 - e1) * (1 - ee)
        k[x, x, 2] = (1 - e1) * ee
        k[x, 2, 2] = e1
    return WiretapChannel(k, f"bec {e1} {e2}")


def parse_kernel_text(text: str) -> WiretapChannel:
    """Plain-text kernel: ``|X| |Y| |Z|`` then ``p(y, z | x)`` row-major."""
    tokens = text.split()
    if len(tokens) < 3:
        raise ValueError("kernel file needs a '|X| |Y| |Z|' header")
    dims = tuple(int(t) for t in tokens[:3])
    values = [float(t) for t in tokens[3:]]
    if len(values) != dims[0] * dims[1] * dims[2]:
        raise ValueError(f"expected {dims[0] * dims[1] * dims[2]} probabilities, found {len(values)}")
    return WiretapChannel(np.array(values).reshape(dims), "kernel-file")


def kernel_text(ch: WiretapChannel) -> str:
    lines = [f"{ch.x_size} {ch.y_size} {ch.z_size}"]
    for x in range(ch.x_size):
        lines.append(" ".join(repr(float(v)) for v in ch.kernel[x].ravel()))
    return "\n".join(lines) + "\n"


def channel_from_spec(spec: str) -> WiretapChannel:
    """``"bsc p1 p2"``, ``"bec e1 e2"`` or a path to a kernel file."""
    parts = spec.split()
    if parts and parts[0] in ("bsc", "bec"):
        if len(parts) != 3:
            raise ValueError(f"preset {parts[0]!r} takes two parameters")
        a, b = float(parts[1]), float(parts[2])
        return degraded_bsc(a, b) if parts[0] == "bsc" else degraded_bec(a, b)
    path = Path(spec)
    if not path.is_file():
        raise ValueError(f"unknown channel {spec!r}: not a preset and not a file")
    return parse_kernel_text(path.read_text())


def mutual_informations(p_x: Pmf, ch: WiretapChannel) -> tuple[float, float]:
    """``(I(X;Y), I(X;Z))`` in bits."""
    j = ch.joint(p_x)
    return j.mutual_information(0, 1), j.mutual_information(0, 2)
