"""Random-unitary ensembles, scrambling diagnostics and design proximity.

Haar sampling uses QR of a complex Ginibre matrix with the R-diagonal phase
correction, which is exact.  The scrambler model is a brick of random
single-qubit rotations followed by a global commuting ZZ entangler, repeated
``t`` times; the entangler is applied as a precomputed diagonal phase mask.

Reproducibility: every sampler takes either an integer seed or a numpy
Generator.  :class:`SeedPlan` derives per-sample seeds from a master seed by
a fixed 64-bit hash of the sample index, so sample ``i`` is the same no
matter how many other samples are drawn or in what order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .qcore import Operator, identity

__all__ = [
    "SeedPlan",
    "haar_unitary",
    "haar_state_array",
    "ScramblerSpec",
    "random_scrambler_spec",
    "entangler_phases",
    "scrambler_circuit",
    "scrambler_unitary",
    "random_scrambler_circuit",
    "EnsembleSpec",
    "sample_unitary",
    "otoc",
    "EnsembleSummary",
    "summarize",
    "frame_potential",
]

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15

SeedLike = Union[int, np.random.Generator]


def _splitmix64(value: int) -> int:
    z = value & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


@dataclass(frozen=True)
class SeedPlan:
    """Counter-based seed derivation: ``seed(i) = mix64(master + (i+1)*GAMMA)``."""

    master_seed: int

    def seed(self, index: int) -> int:
        return _splitmix64((self.master_seed + (index + 1) * _GAMMA) & _MASK64)

    def rng(self, index: int) -> np.random.Generator:
        return np.random.default_rng(self.seed(index))

    def subplan(self, index: int) -> "SeedPlan":
        """Independent plan for a nested loop (grid point, fixture lane, ...)."""
        return SeedPlan(self.seed(index))


def _as_rng(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def haar_unitary(dim: int, seed: SeedLike) -> Operator:
    """Haar-distributed unitary: QR of a Ginibre matrix, R-diagonal phases fixed."""
    if dim < 2:
        raise ValueError("haar_unitary: dim must be >= 2")
    rng = _as_rng(seed)
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r)
    q = q * (diag / np.abs(diag))
    return Operator(q, "unitary")


def haar_state_array(dim: int, seed: SeedLike) -> np.ndarray:
    """Haar-random pure state as a plain amplitude array."""
    rng = _as_rng(seed)
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


@dataclass(frozen=True)
class ScramblerSpec:
    """Parameters of the minimal scrambler ``(V2(g) V1)^t``.

    ``angles`` holds per-qubit triples ``(theta_x, theta_y, theta_z)`` in
    qubit order, length ``3*n_qubits``.  Angles are stored mod 2*pi; the
    wrap only changes the circuit by a global sign, which no cost, OTOC or
    frame-potential value can see.
    """

    n_qubits: int
    g: float
    t: int
    angles: np.ndarray

    def __post_init__(self) -> None:
        if self.n_qubits < 1:
            raise ValueError("ScramblerSpec: n_qubits must be >= 1")
        if not (self.g >= 0 and np.isfinite(self.g)):
            raise ValueError(f"ScramblerSpec: g must be finite and >= 0, got {self.g!r}")
        if self.t < 0:
            raise ValueError(f"ScramblerSpec: t must be >= 0, got {self.t!r}")
        arr = np.array(self.angles, dtype=float, copy=True)
        if arr.shape != (3 * self.n_qubits,):
            raise ValueError(
                f"ScramblerSpec: angles shape {arr.shape} != (3*{self.n_qubits},)"
            )
        if not np.all(np.isfinite(arr)):
            raise ValueError("ScramblerSpec: angles must be finite")
        arr = np.mod(arr, 2 * np.pi)
        arr.setflags(write=False)
        object.__setattr__(self, "angles", arr)

    def with_angles(self, angles: np.ndarray) -> "ScramblerSpec":
        return ScramblerSpec(self.n_qubits, self.g, self.t, angles)


def random_scrambler_spec(n_qubits: int, g: float, t: int, seed: SeedLike) -> ScramblerSpec:
    """Spec with i.i.d. uniform angles in [0, 2*pi)."""
    rng = _as_rng(seed)
    return ScramblerSpec(n_qubits, g, t, rng.uniform(0.0, 2 * np.pi, 3 * n_qubits))


def entangler_phases(n_qubits: int, g: float) -> np.ndarray:
    """Diagonal of ``prod_{i<j} exp(-1j*g*Z_i*Z_j/sqrt(n))``.

    All ZZ terms commute, so the product is the diagonal phase
    ``exp(-1j*g*sum_{i<j} z_i z_j / sqrt(n))`` with ``z_k = +-1``, and
    ``sum_{i<j} z_i z_j = (s^2 - n)/2`` for ``s = sum_k z_k``.
    """
    idx = np.arange(2**n_qubits)
    ones = np.zeros(idx.shape, dtype=np.int64)
    for k in range(n_qubits):
        ones += (idx >> k) & 1
    s = n_qubits - 2 * ones
    pair_sum = (s * s - n_qubits) / 2.0
    return np.exp(-1j * g * pair_sum / np.sqrt(n_qubits))


def _local_units(angles: np.ndarray) -> np.ndarray:
    """Stacked ``Rx(ax) Ry(ay) Rz(az)`` for rows of an (m, 3) angle array."""
    half = np.asarray(angles, dtype=float) / 2.0
    ca, sa = np.cos(half[:, 0]), np.sin(half[:, 0])
    cb, sb = np.cos(half[:, 1]), np.sin(half[:, 1])
    m = half.shape[0]
    rx = np.empty((m, 2, 2), dtype=complex)
    rx[:, 0, 0] = ca
    rx[:, 0, 1] = -1j * sa
    rx[:, 1, 0] = -1j * sa
    rx[:, 1, 1] = ca
    ry = np.zeros((m, 2, 2), dtype=complex)
    ry[:, 0, 0] = cb
    ry[:, 0, 1] = -sb
    ry[:, 1, 0] = sb
    ry[:, 1, 1] = cb
    rz = np.zeros((m, 2, 2), dtype=complex)
    rz[:, 0, 0] = np.exp(-1j * half[:, 2])
    rz[:, 1, 1] = np.exp(1j * half[:, 2])
    return rx @ ry @ rz


def _rotation_brick(angles: np.ndarray) -> np.ndarray:
    """Dense matrix of one single-qubit rotation layer; ``angles`` is (n, 3)."""
    units = _local_units(np.asarray(angles, dtype=float))
    mat = units[0]
    for q in range(1, units.shape[0]):
        mat = np.kron(mat, units[q])
    return mat


def scrambler_circuit(n_qubits: int, g: float, t: int, angles: np.ndarray) -> Operator:
    """Alternating rotation/entangler circuit with per-period angles of shape (t, n, 3).

    Period ``p`` applies the rotation brick built from ``angles[p]`` followed
    by the fixed diagonal entangler.
    """
    arr = np.asarray(angles, dtype=float)
    if arr.shape != (t, n_qubits, 3):
        raise ValueError(f"scrambler_circuit: angles shape {arr.shape} != ({t}, {n_qubits}, 3)")
    dim = 2**n_qubits
    if t == 0:
        return identity(dim)
    units = _local_units(arr.reshape(-1, 3)).reshape(t, n_qubits, 2, 2)
    bricks = units[:, 0]
    for q in range(1, n_qubits):
        d = bricks.shape[1]
        bricks = np.einsum("tij,tkl->tikjl", bricks, units[:, q]).reshape(t, 2 * d, 2 * d)
    bricks = entangler_phases(n_qubits, g)[None, :, None] * bricks
    u = bricks[0]
    for p in range(1, t):
        u = bricks[p] @ u
    return Operator(u, "unitary")


def scrambler_unitary(spec: ScramblerSpec) -> Operator:
    """Dense ``(V2(g) V1)^t`` with the same rotation brick in every period."""
    tiled = np.tile(spec.angles.reshape(1, spec.n_qubits, 3), (spec.t, 1, 1))
    return scrambler_circuit(spec.n_qubits, spec.g, spec.t, tiled)


def random_scrambler_circuit(n_qubits: int, g: float, t: int, seed: SeedLike) -> Operator:
    """Scrambler circuit with i.i.d. uniform angles drawn fresh for every period.

    This is the ensemble actually sampled for Monte Carlo sweeps, OTOC means
    and frame potentials: repeating one fixed rotation brick would only
    randomize eigenphases with ``t`` and never approach a 2-design, whereas
    fresh bricks form a random circuit that does.
    """
    rng = _as_rng(seed)
    return scrambler_circuit(n_qubits, g, t, rng.uniform(0.0, 2 * np.pi, (t, n_qubits, 3)))


@dataclass(frozen=True)
class EnsembleSpec:
    """A seeded unitary ensemble: Haar on 2^n dims, or random-angle scramblers.

    For ``kind="scrambler"``, ``params`` fixes (n, g, t); each draw resamples
    the rotation angles.  The spec stores ``n_qubits`` explicitly so the Haar
    kind knows its dimension.
    """

    kind: str
    n_qubits: int
    master_seed: int
    params: ScramblerSpec | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("haar", "scrambler"):
            raise ValueError(f"EnsembleSpec: unknown kind {self.kind!r}")
        if self.n_qubits < 1:
            raise ValueError("EnsembleSpec: n_qubits must be >= 1")
        if self.kind == "scrambler":
            if self.params is None:
                raise ValueError("EnsembleSpec: scrambler kind requires params")
            if self.params.n_qubits != self.n_qubits:
                raise ValueError("EnsembleSpec: params.n_qubits != n_qubits")

    @property
    def plan(self) -> SeedPlan:
        return SeedPlan(self.master_seed)


def sample_unitary(spec: EnsembleSpec, index: int) -> Operator:
    """Draw sample ``index`` of the ensemble; deterministic given the spec."""
    seed = spec.plan.seed(index)
    if spec.kind == "haar":
        return haar_unitary(2**spec.n_qubits, seed)
    assert spec.params is not None
    return random_scrambler_circuit(spec.n_qubits, spec.params.g, spec.params.t, seed)


def otoc(v: Operator, x: Operator, y: Operator) -> complex:
    """Infinite-temperature OTOC ``Tr[X~ Y X~+ Y+]/d`` with ``X~ = V+ X V``."""
    if not (v.dim == x.dim == y.dim):
        raise ValueError(f"otoc: dimension mismatch {v.dim}, {x.dim}, {y.dim}")
    xt = v.entries.conj().T @ x.entries @ v.entries
    val = np.trace(xt @ y.entries @ xt.conj().T @ y.entries.conj().T)
    return complex(val) / v.dim


@dataclass(frozen=True)
class EnsembleSummary:
    """Monte Carlo summary: unbiased variance, SEs of mean and of variance."""

    mean: float
    variance: float
    std_error_of_mean: float
    std_error_of_variance: float
    samples: int
    seed: int

    def __post_init__(self) -> None:
        if self.samples < 2:
            raise ValueError("EnsembleSummary: need at least 2 samples")
        if self.variance < 0:
            raise ValueError("EnsembleSummary: variance must be >= 0")
        if not (np.isfinite(self.std_error_of_mean) and np.isfinite(self.std_error_of_variance)):
            raise ValueError("EnsembleSummary: standard errors must be finite")


def summarize(values: np.ndarray, seed: int) -> EnsembleSummary:
    """Mean/variance summary; SE of the variance from the fourth central moment."""
    x = np.asarray(values, dtype=float)
    n = x.size
    if n < 2:
        raise ValueError("summarize: need at least 2 samples")
    mean = float(x.mean())
    centered = x - mean
    m2 = float((centered**2).mean())
    m4 = float((centered**4).mean())
    variance = m2 * n / (n - 1)
    var_of_var = (m4 - (n - 3) / (n - 1) * m2 * m2) / n
    return EnsembleSummary(
        mean=mean,
        variance=variance,
        std_error_of_mean=float(np.sqrt(variance / n)),
        std_error_of_variance=float(np.sqrt(max(var_of_var, 0.0))),
        samples=n,
        seed=seed,
    )


def frame_potential(spec: EnsembleSpec, k: int, samples: int) -> EnsembleSummary:
    """Monte Carlo ``F^(k) = E|Tr[U+V]|^(2k)`` over i.i.d. ensemble pairs.

    Haar values are 1 (k=1) and 2 (k=2); k-designs attain these minima, so
    ``F^(2) - 2`` serves as the 2-design proximity statistic.
    """
    if k not in (1, 2):
        raise ValueError("frame_potential: k must be 1 or 2")
    if samples < 2:
        raise ValueError("frame_potential: samples must be >= 2")
    values = np.empty(samples)
    for i in range(samples):
        u = sample_unitary(spec, 2 * i)
        v = sample_unitary(spec, 2 * i + 1)
        overlap = np.abs(np.trace(u.entries.conj().T @ v.entries))
        values[i] = overlap ** (2 * k)
    return summarize(values, spec.master_seed)
