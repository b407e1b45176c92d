"""Exact finite-alphabet probability arithmetic.

Probability vectors, row-stochastic kernels and dense joint PMFs over named
finite alphabets, with entropy / mutual information / total variation /
relative entropy in bits, the binary entropy function and its inverse, and
the block-kernel divergence-domination gap check.

Conventions
-----------
- All logarithms are base 2; rates and entropies are in bits.
- 0 * log 0 = 0; a relative-entropy term with p > 0 on q = 0 yields an
  explicit ``math.inf`` signal rather than an exception.
- Vectors failing normalization by at most ``PMF_ATOL`` are renormalized on
  construction; worse violations are rejected.
- All values are immutable after construction and safe to share across
  threads; every operation is a pure function of its inputs.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

from .errors import BudgetError, ValidationError

#: Normalization slack: renormalize within, reject beyond.
PMF_ATOL = 1e-9

#: Negative MI values within this of zero are floating-point noise; clamp to 0.
MI_CLAMP = 1e-12

#: Default cap on dense joint-array cells, overridable via environment.
DEFAULT_CELL_BUDGET = 10_000_000

_BUDGET_ENV = "SDWTC_CELL_BUDGET"


def cell_budget() -> int:
    """Active dense-array cell budget (env ``SDWTC_CELL_BUDGET`` overrides)."""
    raw = os.environ.get(_BUDGET_ENV)
    if raw is None:
        return DEFAULT_CELL_BUDGET
    try:
        value = int(raw)
    except ValueError as exc:
        raise ValidationError(f"{_BUDGET_ENV} must be an integer, got {raw!r}") from exc
    if value <= 0:
        raise ValidationError(f"{_BUDGET_ENV} must be positive, got {value}")
    return value


def _clean_mass(arr: np.ndarray, what: str) -> np.ndarray:
    """Validate nonnegativity and unit total mass; renormalize tiny slack."""
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{what}: non-finite entries")
    if np.any(arr < -MI_CLAMP):
        raise ValidationError(f"{what}: negative entry {float(arr.min()):.3g}")
    arr = np.where(arr < 0.0, 0.0, arr)
    total = float(arr.sum())
    if abs(total - 1.0) > PMF_ATOL:
        raise ValidationError(f"{what}: mass sums to {total!r}, not 1 within {PMF_ATOL}")
    # Renormalize only genuine slack; near-ulp sums pass through bit-identical
    # so that construction is idempotent and file round trips are exact.
    if abs(total - 1.0) > 1e-13:
        arr = arr / total
    return arr


@dataclass(frozen=True, eq=False)
class FinitePmf:
    """A probability mass function over an unnamed finite alphabet."""

    probs: np.ndarray

    def __init__(self, probs):
        arr = np.asarray(probs, dtype=np.float64).reshape(-1)
        if arr.size == 0:
            raise ValidationError("FinitePmf: empty support")
        arr = _clean_mass(arr, "FinitePmf")
        arr.setflags(write=False)
        object.__setattr__(self, "probs", arr)

    @property
    def support_size(self) -> int:
        return int(self.probs.size)

    def entropy(self) -> float:
        """H(p) in bits."""
        return _entropy_bits(self.probs)

    def __eq__(self, other) -> bool:
        return isinstance(other, FinitePmf) and np.array_equal(self.probs, other.probs)


@dataclass(frozen=True, eq=False)
class CondKernel:
    """A row-stochastic kernel from a product input alphabet to one output.

    ``rows[i]`` is the output PMF for the i-th input tuple, with input tuples
    flattened row-major over ``input_shape``.
    """

    input_shape: tuple[int, ...]
    output_size: int
    rows: np.ndarray

    def __init__(self, input_shape: Sequence[int], output_size: int, rows):
        shape = tuple(int(c) for c in input_shape)
        if not shape or any(c < 1 for c in shape):
            raise ValidationError(f"CondKernel: bad input shape {shape}")
        if output_size < 1:
            raise ValidationError(f"CondKernel: bad output size {output_size}")
        arr = np.asarray(rows, dtype=np.float64)
        n_in = int(np.prod(shape))
        arr = arr.reshape(n_in, int(output_size))
        cleaned = np.empty_like(arr)
        for i in range(n_in):
            try:
                cleaned[i] = _clean_mass(arr[i], f"CondKernel row {i}")
            except ValidationError as exc:
                raise ValidationError(str(exc)) from None
        cleaned.setflags(write=False)
        object.__setattr__(self, "input_shape", shape)
        object.__setattr__(self, "output_size", int(output_size))
        object.__setattr__(self, "rows", cleaned)

    def row(self, *idx: int) -> np.ndarray:
        flat = int(np.ravel_multi_index(idx, self.input_shape))
        return self.rows[flat]

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, CondKernel)
            and self.input_shape == other.input_shape
            and self.output_size == other.output_size
            and np.array_equal(self.rows, other.rows)
        )


@dataclass(frozen=True, eq=False)
class SdWtc:
    """A state-dependent wiretap channel: state law plus (S,X)->(Y,Z) kernel.

    The kernel output flattens (y, z) row-major as ``y * card_Z + z``.
    ``degraded_by_construction`` marks channels built from an explicit garbling
    of Z into Y (so the eavesdropper output is less noisy by construction).
    ``state_factors`` / ``output_factors`` optionally record a composite
    (component-name -> size) structure of S and Y, component-major in index
    order.
    """

    state_law: FinitePmf
    kernel: CondKernel
    card_Y: int
    card_Z: int
    degraded_by_construction: bool = False
    state_factors: dict | None = None
    output_factors: dict | None = None

    def __post_init__(self):
        if self.kernel.input_shape != (self.card_S, self.card_X):
            raise ValidationError(
                f"SdWtc: kernel input shape {self.kernel.input_shape} != "
                f"(|S|,|X|)=({self.card_S},{self.card_X})"
            )
        if self.kernel.output_size != self.card_Y * self.card_Z:
            raise ValidationError(
                f"SdWtc: kernel output size {self.kernel.output_size} != "
                f"|Y|*|Z|={self.card_Y * self.card_Z}"
            )

    @property
    def card_S(self) -> int:
        return self.state_law.support_size

    @property
    def card_X(self) -> int:
        return self.kernel.input_shape[1]

    def transition(self) -> np.ndarray:
        """Kernel as a dense [S, X, Y, Z] array."""
        return self.kernel.rows.reshape(self.card_S, self.card_X, self.card_Y, self.card_Z)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, SdWtc)
            and self.state_law == other.state_law
            and self.kernel == other.kernel
            and self.card_Y == other.card_Y
            and self.card_Z == other.card_Z
        )


@dataclass(frozen=True, eq=False)
class Auxiliary:
    """A coding auxiliary q(u,v,x|s) with declared |U| and |V|.

    The kernel output flattens (u, v, x) row-major as ``(u*card_V + v)*card_X + x``.
    """

    card_U: int
    card_V: int
    kernel: CondKernel

    def __post_init__(self):
        if len(self.kernel.input_shape) != 1:
            raise ValidationError("Auxiliary: kernel input must be the single state axis")
        if self.kernel.output_size % (self.card_U * self.card_V) != 0:
            raise ValidationError(
                f"Auxiliary: output size {self.kernel.output_size} not divisible by "
                f"|U|*|V|={self.card_U * self.card_V}"
            )

    @property
    def card_S(self) -> int:
        return self.kernel.input_shape[0]

    @property
    def card_X(self) -> int:
        return self.kernel.output_size // (self.card_U * self.card_V)

    def table(self) -> np.ndarray:
        """Kernel as a dense [S, U, V, X] array."""
        return self.kernel.rows.reshape(self.card_S, self.card_U, self.card_V, self.card_X)

    def serialized(self) -> bytes:
        """Canonical byte serialization (used for deterministic tie-breaks)."""
        return self.kernel.rows.tobytes()

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Auxiliary)
            and (self.card_U, self.card_V) == (other.card_U, other.card_V)
            and self.kernel == other.kernel
        )


# ---------------------------------------------------------------------------
# Joint PMFs over named axes
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class JointPmf:
    """A dense joint PMF over an ordered tuple of named finite alphabets."""

    axes: tuple[str, ...]
    mass: np.ndarray

    def __init__(self, axes: Sequence[str], mass):
        names = tuple(str(a) for a in axes)
        if len(set(names)) != len(names):
            raise ValidationError(f"JointPmf: duplicate axis names in {names}")
        arr = np.asarray(mass, dtype=np.float64)
        if arr.ndim != len(names):
            raise ValidationError(
                f"JointPmf: {len(names)} axes but mass has {arr.ndim} dimensions"
            )
        arr = _clean_mass(arr, "JointPmf")
        arr.setflags(write=False)
        object.__setattr__(self, "axes", names)
        object.__setattr__(self, "mass", arr)

    def _axis_ids(self, names: Iterable[str]) -> tuple[int, ...]:
        out = []
        for name in names:
            if name not in self.axes:
                raise ValidationError(f"unknown axis {name!r}; have {self.axes}")
            out.append(self.axes.index(name))
        return tuple(out)

    def marginal(self, keep_axes: Iterable[str]) -> "JointPmf":
        """Sum out the complement of ``keep_axes``; axis order is preserved."""
        keep = set(keep_axes)
        keep_ids = self._axis_ids(keep)  # validates names
        drop = tuple(i for i, a in enumerate(self.axes) if a not in keep)
        if not drop:
            return self
        new_axes = tuple(a for a in self.axes if a in keep)
        return JointPmf(new_axes, self.mass.sum(axis=drop))

    def merged(self, names: Sequence[str], new_name: str) -> "JointPmf":
        """Fuse several axes into one composite axis (row-major in given order)."""
        ids = self._axis_ids(names)
        rest = [i for i in range(len(self.axes)) if i not in ids]
        order = list(ids) + rest
        moved = np.transpose(self.mass, order)
        fused = moved.reshape((-1,) + moved.shape[len(ids):])
        new_axes = (new_name,) + tuple(self.axes[i] for i in rest)
        return JointPmf(new_axes, fused)

    def _subset_entropy(self, names: Iterable[str]) -> float:
        names = tuple(names)
        if not names:
            return 0.0
        return _entropy_bits(self.marginal(names).mass)

    def entropy(self, A: Iterable[str], C: Iterable[str] = ()) -> float:
        """Conditional entropy H(A|C) in bits (C may be empty)."""
        A, C = tuple(A), tuple(C)
        if not A:
            raise ValidationError("entropy: A must be nonempty")
        if set(A) & set(C):
            raise ValidationError(f"entropy: overlapping axis sets {A} and {C}")
        return self._subset_entropy(A + C) - self._subset_entropy(C)

    def mutual_information(
        self, A: Iterable[str], B: Iterable[str], C: Iterable[str] = ()
    ) -> float:
        """Conditional mutual information I(A;B|C) in bits (C may be empty)."""
        A, B, C = tuple(A), tuple(B), tuple(C)
        for left, right in ((A, B), (A, C), (B, C)):
            if set(left) & set(right):
                raise ValidationError(f"mutual_information: axis sets overlap: {left} {right}")
        value = (
            self._subset_entropy(A + C)
            + self._subset_entropy(B + C)
            - self._subset_entropy(A + B + C)
            - self._subset_entropy(C)
        )
        if value < 0.0 and value > -MI_CLAMP:
            return 0.0
        return value


def _entropy_bits(mass: np.ndarray) -> float:
    flat = np.asarray(mass, dtype=np.float64).reshape(-1)
    pos = flat[flat > 0.0]
    return float(-(pos * np.log2(pos)).sum())


def assemble_joint(wtc: SdWtc, aux: Auxiliary, budget: int | None = None) -> JointPmf:
    """Joint PMF over (S,U,V,X,Y,Z) induced by state law, auxiliary and channel.

    mass(s,u,v,x,y,z) = W_S(s) q(u,v,x|s) W(y,z|s,x). The construction makes
    (U,V) - (S,X) - (Y,Z) a Markov chain.
    """
    if aux.card_S != wtc.card_S:
        raise ValidationError(
            f"axis S: auxiliary defined over {aux.card_S} states, channel has {wtc.card_S}"
        )
    if aux.card_X != wtc.card_X:
        raise ValidationError(
            f"axis X: auxiliary emits {aux.card_X} inputs, channel expects {wtc.card_X}"
        )
    cells = (
        wtc.card_S * aux.card_U * aux.card_V * wtc.card_X * wtc.card_Y * wtc.card_Z
    )
    limit = cell_budget() if budget is None else budget
    if cells > limit:
        raise BudgetError(f"joint needs {cells} cells, budget is {limit}")
    mass = np.einsum(
        "s,suvx,sxyz->suvxyz",
        wtc.state_law.probs,
        aux.table(),
        wtc.transition(),
        optimize=True,
    )
    return JointPmf(("S", "U", "V", "X", "Y", "Z"), mass)


# ---------------------------------------------------------------------------
# Scalar information measures
# ---------------------------------------------------------------------------


def binary_entropy(p: float) -> float:
    """h(p) = -p log2 p - (1-p) log2(1-p); h(0) = h(1) = 0."""
    if not 0.0 <= p <= 1.0:
        raise ValidationError(f"binary_entropy: p={p!r} outside [0,1]")
    if p == 0.0 or p == 1.0:
        return 0.0
    return float(-p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p))


def binary_entropy_inv(v: float) -> float:
    """Inverse of h restricted to [0, 0.5], by bisection."""
    if not 0.0 <= v <= 1.0:
        raise ValidationError(f"binary_entropy_inv: v={v!r} outside [0,1]")
    if v == 0.0:
        return 0.0
    if v == 1.0:
        return 0.5
    lo, hi = 0.0, 0.5
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if binary_entropy(mid) < v:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def tv_distance(p: FinitePmf, q: FinitePmf) -> float:
    """Total variation distance (1/2) sum |p - q|."""
    if p.support_size != q.support_size:
        raise ValidationError(
            f"tv_distance: support sizes differ ({p.support_size} vs {q.support_size})"
        )
    return 0.5 * float(np.abs(p.probs - q.probs).sum())


def kl_divergence(p: np.ndarray, q: np.ndarray) -> float:
    """D(p||q) in bits; returns math.inf when p puts mass outside supp(q)."""
    p = np.asarray(p, dtype=np.float64).reshape(-1)
    q = np.asarray(q, dtype=np.float64).reshape(-1)
    if p.size != q.size:
        raise ValidationError("kl_divergence: size mismatch")
    mask = p > 0.0
    if np.any(q[mask] <= 0.0):
        return math.inf
    return float((p[mask] * (np.log2(p[mask]) - np.log2(q[mask]))).sum())


def _product_rows(single: np.ndarray, card_x: int, n: int) -> np.ndarray:
    """Rows of the n-fold product kernel q^n, block inputs row-major."""
    out = []
    for flat in range(card_x**n):
        idx = np.unravel_index(flat, (card_x,) * n)
        out.append(reduce(np.kron, (single[i] for i in idx)))
    return np.asarray(out)


def lemma5_gap(
    p_x: FinitePmf, p_ygx: CondKernel, q_ygx: CondKernel, n: int
) -> float:
    """Slack of the bound "total variation dominates relative entropy".

    For a block input law p_X on X^n, a block kernel p_{Y|X} on blocks and a
    single-letter kernel q_{Y|X}, returns

        TV * (n log2|Y| + log2(1/TV) + n log2(1/xi)) - D(p_{Y|X} || q^n_{Y|X} | p_X)

    with xi the minimum positive entry of the single-letter kernel and
    TV = || p_X p_{Y|X} - p_X q^n_{Y|X} ||_TV. An absolute-continuity
    violation makes the divergence infinite; the gap is then ``-math.inf``
    (an explicit signal, not an exception).
    """
    if n < 1:
        raise ValidationError(f"lemma5_gap: n={n} must be >= 1")
    card_x = q_ygx.input_shape[0] if len(q_ygx.input_shape) == 1 else None
    if card_x is None:
        raise ValidationError("lemma5_gap: q_ygx must be single-letter (one input axis)")
    card_y = q_ygx.output_size
    n_blocks = card_x**n
    if p_x.support_size != n_blocks:
        raise ValidationError(
            f"lemma5_gap: p_x has support {p_x.support_size}, expected |X|^n={n_blocks}"
        )
    block_rows = p_ygx.rows
    if block_rows.shape != (n_blocks, card_y**n):
        raise ValidationError(
            f"lemma5_gap: block kernel shape {block_rows.shape}, "
            f"expected ({n_blocks},{card_y ** n})"
        )
    qn = _product_rows(q_ygx.rows, card_x, n)

    divergence = 0.0
    l1 = 0.0
    for b in range(n_blocks):
        w = float(p_x.probs[b])
        if w == 0.0:
            continue
        d = kl_divergence(block_rows[b], qn[b])
        if math.isinf(d):
            return -math.inf
        divergence += w * d
        l1 += w * float(np.abs(block_rows[b] - qn[b]).sum())
    tv = 0.5 * l1
    xi = float(q_ygx.rows[q_ygx.rows > 0.0].min())
    if tv <= 0.0:
        bound = 0.0
    else:
        bound = tv * (n * math.log2(card_y) + math.log2(1.0 / tv) + n * math.log2(1.0 / xi))
    return bound - divergence
