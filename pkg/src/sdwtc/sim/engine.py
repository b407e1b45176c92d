"""Micro block-length realization of the layered random-coding scheme.

Builds a two-layer random codebook (inner words indexed by i, outer words by
(i, j, k, m)), encodes by sampling the redundancy indices with probability
proportional to the reverse-channel likelihood of the observed state block,
transmits over the memoryless channel, and decodes by unique letter-typicality
over all cells. Measured quantities: per-message decoding error, key
uniformity (total variation of the conditional key law against uniform) and,
in exact mode, the information leaked to the eavesdropper, computed by full
enumeration of the induced block distribution.

Trials are independently seeded from (seed, m, trial) and aggregation is
order-independent; the codebook is immutable after generation and shared
read-only. Asymptotic guarantees (vanishing error, exponentially uniform
keys, vanishing leakage) are only *trends* at these block lengths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce
from typing import Optional

import numpy as np

from ..errors import BudgetError, ValidationError
from ..prob import Auxiliary, CondKernel, FinitePmf, SdWtc, assemble_joint, cell_budget
from . import _backend

_CODEBOOK_TAG = 1
_TRIAL_TAG = 3


@dataclass(frozen=True)
class SimConfig:
    """Block length, target rates, typicality slack and trial budget.

    Index-set sizes are floor(2^{n*rate}), floored at 1; the realized sizes
    and effective rates are echoed in the report.
    """

    n: int
    rate_m: float
    rate_k: float
    rate_1: float
    rate_2: float
    eps_typ: float = 0.1
    trials: int = 200
    seed: int = 0
    exact_mode: bool = False

    def __post_init__(self):
        if self.n < 1:
            raise ValidationError(f"n={self.n} must be >= 1")
        for name in ("rate_m", "rate_k", "rate_1", "rate_2"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be nonnegative")
        if self.trials < 1:
            raise ValidationError("trials must be >= 1")
        if not 0.0 < self.eps_typ < 1.0:
            raise ValidationError(f"eps_typ={self.eps_typ} outside (0,1)")

    def index_sizes(self) -> tuple[int, int, int, int]:
        """(|I|, |J|, |K|, |M|) realized from the rates."""

        def size(rate: float) -> int:
            return max(1, int(math.floor(2.0 ** (self.n * rate) + 1e-9)))

        return size(self.rate_1), size(self.rate_2), size(self.rate_k), size(self.rate_m)


@dataclass(frozen=True)
class SchemeLaw:
    """Per-symbol tables derived from one (channel, auxiliary) session."""

    card_S: int
    card_U: int
    card_V: int
    card_X: int
    card_Y: int
    card_Z: int
    q_u: FinitePmf
    q_vgu: CondKernel
    logq_sguv: np.ndarray  # [(u*V+v)*S + s], log2-free natural log not needed: ln
    cum_xguvs: np.ndarray  # [U, V, S, X] cumulative
    q_uvy: np.ndarray  # [(u*V+v)*Y + y] typicality target
    cum_state: np.ndarray  # [S]
    state: np.ndarray
    cum_yz: np.ndarray  # [S, X, Y*Z] cumulative
    t_z: np.ndarray  # [U*V, S, Z] eavesdropper symbol law given (u,v,s)
    q_zguv: np.ndarray  # [U*V, Z]
    q_zgu: np.ndarray  # [U, Z]

    @classmethod
    def from_components(cls, wtc: SdWtc, aux: Auxiliary) -> "SchemeLaw":
        j = assemble_joint(wtc, aux)
        m_suvx = j.mass.sum(axis=(4, 5))  # [S,U,V,X]
        m_suv = m_suvx.sum(axis=3)
        m_uv = m_suv.sum(axis=0)
        m_u = m_uv.sum(axis=1)
        card_S, card_U, card_V, card_X = m_suvx.shape
        card_Y, card_Z = wtc.card_Y, wtc.card_Z

        with np.errstate(divide="ignore", invalid="ignore"):
            q_sguv = np.where(m_uv[None, :, :] > 0, m_suv / m_uv[None, :, :], 0.0)
            q_xguvs = np.where(
                m_suv[:, :, :, None] > 0, m_suvx / m_suv[:, :, :, None], 0.0
            )
            logq = np.log(np.transpose(q_sguv, (1, 2, 0)))  # [U,V,S], log 0 -> -inf

        q_vgu = np.where(m_u[:, None] > 0, m_uv / m_u[:, None], 1.0 / card_V)
        m_uvy = j.mass.sum(axis=(0, 3, 5))  # [U,V,Y]
        m_uvz = j.mass.sum(axis=(0, 3, 4))  # [U,V,Z]
        m_uz = m_uvz.sum(axis=1)
        w = wtc.transition()  # [S,X,Y,Z]
        t_z = np.einsum("suvx,sxz->uvsz", q_xguvs, w.sum(axis=2))
        with np.errstate(divide="ignore", invalid="ignore"):
            q_zguv = np.where(m_uv[:, :, None] > 0, m_uvz / m_uv[:, :, None], 0.0)
            q_zgu = np.where(m_u[:, None] > 0, m_uz / m_u[:, None], 0.0)
        return cls(
            card_S=card_S,
            card_U=card_U,
            card_V=card_V,
            card_X=card_X,
            card_Y=card_Y,
            card_Z=card_Z,
            q_u=FinitePmf(m_u),
            q_vgu=CondKernel((card_U,), card_V, q_vgu),
            logq_sguv=np.ascontiguousarray(logq.reshape(card_U * card_V, card_S)).reshape(-1),
            cum_xguvs=np.cumsum(np.transpose(q_xguvs, (1, 2, 0, 3)), axis=-1),
            q_uvy=np.ascontiguousarray(m_uvy.reshape(-1)),
            cum_state=np.cumsum(wtc.state_law.probs),
            state=wtc.state_law.probs,
            cum_yz=np.cumsum(wtc.kernel.rows.reshape(card_S, card_X, -1), axis=-1),
            t_z=t_z.reshape(card_U * card_V, card_S, card_Z),
            q_zguv=q_zguv.reshape(card_U * card_V, card_Z),
            q_zgu=q_zgu,
        )


@dataclass(frozen=True)
class Codebook:
    """Realized two-layer codebook with its generation law recorded."""

    u_words: np.ndarray  # [I, n] int64
    v_words: np.ndarray  # [I, J, K, M, n] int64
    q_u: FinitePmf
    q_vgu: CondKernel
    seed: int

    @property
    def sizes(self) -> tuple[int, int, int, int]:
        i, jj, k, m, _ = self.v_words.shape
        return i, jj, k, m

    @property
    def n(self) -> int:
        return self.u_words.shape[1]

    def pair_index(self, m: int) -> np.ndarray:
        """Flattened (u*V+v) index array [I*J*K, n] for message m."""
        card_v = self.q_vgu.output_size
        v_m = self.v_words[:, :, :, m, :]
        uv = self.u_words[:, None, None, :] * card_v + v_m
        return np.ascontiguousarray(uv.reshape(-1, self.n))

    def pair_index_all(self) -> np.ndarray:
        """Flattened (u*V+v) index array [I*J*K*M, n] over all cells."""
        card_v = self.q_vgu.output_size
        uv = self.u_words[:, None, None, None, :] * card_v + self.v_words
        return np.ascontiguousarray(uv.reshape(-1, self.n))


class EncodingFailure(Exception):
    """Every codebook cell has zero likelihood for the observed state block."""


@dataclass(frozen=True)
class EncodeResult:
    i: int
    j: int
    k: int
    x_seq: np.ndarray


@dataclass(frozen=True)
class DecodeResult:
    i: int
    j: int
    k: int
    m: int
    unique: bool
    matches: int


@dataclass(frozen=True)
class SimReport:
    """Measured performance of one simulated configuration."""

    avg_error: float
    max_error: float
    key_tv: float
    leakage_bits: Optional[float]
    divergence_surrogate: Optional[float]
    encoding_failures: int
    trial_count: int
    n: int
    sizes: dict = field(default_factory=dict)
    effective_rates: dict = field(default_factory=dict)
    eps_typ: float = 0.1
    seed: int = 0
    backend: str = _backend.BACKEND

    def to_dict(self) -> dict:
        return {
            "avg_error": self.avg_error,
            "max_error": self.max_error,
            "key_tv": self.key_tv,
            "leakage_bits": self.leakage_bits,
            "divergence_surrogate": self.divergence_surrogate,
            "encoding_failures": self.encoding_failures,
            "trial_count": self.trial_count,
            "n": self.n,
            "sizes": dict(self.sizes),
            "effective_rates": dict(self.effective_rates),
            "eps_typ": self.eps_typ,
            "seed": self.seed,
            "backend": self.backend,
        }


def _draw(cum: np.ndarray, r: float) -> int:
    return min(int(np.searchsorted(cum, r, side="right")), cum.size - 1)


def _draw_rows(cum_rows: np.ndarray, rs: np.ndarray) -> np.ndarray:
    """Row-wise inverse-CDF draws: cum_rows [n, K], rs [n]."""
    idx = (cum_rows < rs[:, None]).sum(axis=1)
    return np.minimum(idx, cum_rows.shape[1] - 1)


def generate_codebook(q_u: FinitePmf, q_vgu: CondKernel, cfg: SimConfig) -> Codebook:
    """Draw the two-layer codebook from its design law, deterministically.

    Inner words are i.i.d. q_u over symbols; each outer cell (i, j, k, m) is
    drawn i.i.d. from q_{V|U} conditioned symbol-wise on the i-th inner word.
    """
    size_i, size_j, size_k, size_m = cfg.index_sizes()
    cells = size_i * size_j * size_k * size_m
    if cells * cfg.n > cell_budget():
        raise BudgetError(
            f"codebook needs {cells * cfg.n} symbols, budget is {cell_budget()}"
        )
    if q_vgu.input_shape != (q_u.support_size,):
        raise ValidationError("q_vgu must condition on the inner alphabet")
    rng = np.random.default_rng((cfg.seed, _CODEBOOK_TAG))
    cum_u = np.cumsum(q_u.probs)
    u_words = np.searchsorted(cum_u, rng.random((size_i, cfg.n)), side="right")
    u_words = np.minimum(u_words, q_u.support_size - 1).astype(np.int64)
    cum_v = np.cumsum(q_vgu.rows, axis=1)
    rv = rng.random((size_i, size_j, size_k, size_m, cfg.n))
    v_words = np.empty((size_i, size_j, size_k, size_m, cfg.n), dtype=np.int64)
    for i in range(size_i):
        for t in range(cfg.n):
            row = cum_v[u_words[i, t]]
            v_words[i, :, :, :, t] = np.minimum(
                np.searchsorted(row, rv[i, :, :, :, t], side="right"),
                q_vgu.output_size - 1,
            )
    return Codebook(u_words=u_words, v_words=v_words, q_u=q_u, q_vgu=q_vgu, seed=cfg.seed)


def likelihood_encode(
    cb: Codebook,
    m: int,
    s_seq: np.ndarray,
    rng: np.random.Generator,
    law: SchemeLaw,
    pair_idx: np.ndarray | None = None,
) -> EncodeResult:
    """Sample (i, j, k) with probability proportional to the cell likelihood
    of the observed state block, then the input block symbol-wise.

    Raises :class:`EncodingFailure` when every cell has zero likelihood
    (possible at micro block lengths; callers count it as an error).
    """
    size_i, size_j, size_k, size_m = cb.sizes
    if not 0 <= m < size_m:
        raise ValidationError(f"message index {m} outside [0, {size_m})")
    s_seq = np.asarray(s_seq, dtype=np.int64)
    if pair_idx is None:
        pair_idx = cb.pair_index(m)
    logw = _backend.cell_log_weights(law.logq_sguv, pair_idx, s_seq, law.card_S)
    top = logw.max()
    if not np.isfinite(top):
        raise EncodingFailure("state block outside the support of every cell")
    w = np.exp(logw - top)
    cum = np.cumsum(w)
    cell = _draw(cum / cum[-1], rng.random())
    i, j, k = np.unravel_index(cell, (size_i, size_j, size_k))
    u_sel = cb.u_words[i]
    v_sel = cb.v_words[i, j, k, m]
    cum_rows = law.cum_xguvs[u_sel, v_sel, s_seq]
    x_seq = _draw_rows(cum_rows, rng.random(cb.n))
    return EncodeResult(i=int(i), j=int(j), k=int(k), x_seq=x_seq.astype(np.int64))


def typicality_decode(
    cb: Codebook,
    y_seq: np.ndarray,
    eps_typ: float,
    q_uvy: np.ndarray,
    card_y: int,
    pair_idx_all: np.ndarray | None = None,
) -> DecodeResult:
    """Unique letter-typicality decoding over all cells.

    Returns the unique typical cell if exactly one exists; otherwise the fixed
    fallback cell (0, 0, 0, 0) with ``unique=False``.
    """
    y_seq = np.asarray(y_seq, dtype=np.int64)
    if pair_idx_all is None:
        pair_idx_all = cb.pair_index_all()
    mask = _backend.typical_cells(pair_idx_all, y_seq, card_y, q_uvy, eps_typ)
    hits = np.flatnonzero(mask)
    if hits.size == 1:
        i, j, k, m = np.unravel_index(int(hits[0]), cb.sizes)
        return DecodeResult(int(i), int(j), int(k), int(m), True, 1)
    return DecodeResult(0, 0, 0, 0, False, int(hits.size))


def run_trials(wtc: SdWtc, aux: Auxiliary, cfg: SimConfig) -> SimReport:
    """Monte Carlo measurement of error and key metrics, stratified by message.

    ``cfg.trials`` is the total trial budget, split evenly across messages
    (at least one trial per message). Exact-mode additionally computes the
    leakage and the per-(m,k) divergence surrogate by full enumeration.
    """
    law = SchemeLaw.from_components(wtc, aux)
    cb = generate_codebook(law.q_u, law.q_vgu, cfg)
    size_i, size_j, size_k, size_m = cb.sizes
    trials_per_m = max(1, cfg.trials // size_m)
    pair_all = cb.pair_index_all()
    pair_by_m = [cb.pair_index(m) for m in range(size_m)]

    errors = np.zeros(size_m, dtype=np.int64)
    failures = 0
    key_counts = np.zeros((size_m, size_k), dtype=np.int64)
    n = cfg.n
    for m in range(size_m):
        for t in range(trials_per_m):
            rng = np.random.default_rng((cfg.seed, _TRIAL_TAG, m, t))
            s_seq = np.minimum(
                np.searchsorted(law.cum_state, rng.random(n), side="right"),
                law.card_S - 1,
            ).astype(np.int64)
            try:
                enc = likelihood_encode(cb, m, s_seq, rng, law, pair_idx=pair_by_m[m])
            except EncodingFailure:
                failures += 1
                errors[m] += 1
                continue
            key_counts[m, enc.k] += 1
            cum_rows = law.cum_yz[s_seq, enc.x_seq]
            yz = _draw_rows(cum_rows, rng.random(n))
            y_seq = (yz // law.card_Z).astype(np.int64)
            dec = typicality_decode(
                cb, y_seq, cfg.eps_typ, law.q_uvy, law.card_Y, pair_idx_all=pair_all
            )
            if not (dec.m == m and dec.k == enc.k):
                errors[m] += 1

    per_message_error = errors / trials_per_m
    uniform = np.full(size_k, 1.0 / size_k)
    key_tv = 0.0
    for m in range(size_m):
        total = key_counts[m].sum()
        if total > 0:
            emp = key_counts[m] / total
            key_tv = max(key_tv, 0.5 * float(np.abs(emp - uniform).sum()))
        else:
            key_tv = 1.0

    leakage = None
    surrogate = None
    if cfg.exact_mode:
        leakage = exact_leakage(wtc, aux, cfg, law=law, cb=cb)
        surrogate = divergence_surrogate(wtc, aux, cfg, law=law, cb=cb)

    sizes = {"I": size_i, "J": size_j, "K": size_k, "M": size_m}
    eff = {
        key: math.log2(val) / cfg.n
        for key, val in (("rate_1", size_i), ("rate_2", size_j), ("rate_k", size_k), ("rate_m", size_m))
    }
    return SimReport(
        avg_error=float(per_message_error.mean()),
        max_error=float(per_message_error.max()),
        key_tv=key_tv,
        leakage_bits=leakage,
        divergence_surrogate=surrogate,
        encoding_failures=failures,
        trial_count=int(trials_per_m * size_m),
        n=cfg.n,
        sizes=sizes,
        effective_rates=eff,
        eps_typ=cfg.eps_typ,
        seed=cfg.seed,
        backend=_backend.BACKEND,
    )


# ---------------------------------------------------------------------------
# Exact enumeration (micro instances only)
# ---------------------------------------------------------------------------


def _state_blocks(card_s: int, n: int) -> np.ndarray:
    """All state blocks [card_s**n, n], row-major."""
    blocks = np.indices((card_s,) * n).reshape(n, -1).T
    return np.ascontiguousarray(blocks.astype(np.int64))


def _check_exact_budget(cfg: SimConfig, law: SchemeLaw, z_factor: bool) -> None:
    size_i, size_j, size_k, size_m = cfg.index_sizes()
    cost = size_i * size_j * size_k * size_m * (law.card_S**cfg.n)
    if z_factor:
        cost *= law.card_Z**cfg.n
    if cost > cell_budget():
        raise BudgetError(f"exact enumeration needs {cost} cells, budget is {cell_budget()}")


def _cell_posteriors(law: SchemeLaw, cb: Codebook, m: int, s_blocks: np.ndarray):
    """[n_blocks, cells] posterior over (i,j,k) given each state block."""
    pair_idx = cb.pair_index(m)
    out = np.zeros((s_blocks.shape[0], pair_idx.shape[0]))
    for b in range(s_blocks.shape[0]):
        logw = _backend.cell_log_weights(law.logq_sguv, pair_idx, s_blocks[b], law.card_S)
        top = logw.max()
        if not np.isfinite(top):
            continue  # encoding fails for this block; no index is chosen
        w = np.exp(logw - top)
        out[b] = w / w.sum()
    return out


def key_uniformity_exact(
    wtc: SdWtc, aux: Auxiliary, cfg: SimConfig, law: SchemeLaw | None = None,
    cb: Codebook | None = None,
) -> np.ndarray:
    """Exact per-message total variation of the key law against uniform.

    State blocks on which encoding fails contribute no key mass; the
    conditional key law is renormalized over the successful blocks.
    """
    law = law or SchemeLaw.from_components(wtc, aux)
    cb = cb or generate_codebook(law.q_u, law.q_vgu, cfg)
    _check_exact_budget(cfg, law, z_factor=False)
    size_i, size_j, size_k, size_m = cb.sizes
    s_blocks = _state_blocks(law.card_S, cfg.n)
    block_probs = law.state[s_blocks].prod(axis=1)
    uniform = np.full(size_k, 1.0 / size_k)
    tvs = np.zeros(size_m)
    for m in range(size_m):
        post = _cell_posteriors(law, cb, m, s_blocks)
        by_k = post.reshape(-1, size_i, size_j, size_k).sum(axis=(1, 2))
        p_k = block_probs @ by_k
        total = p_k.sum()
        if total <= 0:
            tvs[m] = 1.0
            continue
        p_k = p_k / total
        tvs[m] = 0.5 * float(np.abs(p_k - uniform).sum())
    return tvs


def _cell_z_laws(law: SchemeLaw, pair_idx: np.ndarray, s_block: np.ndarray) -> np.ndarray:
    """[cells, |Z|^n] eavesdropper block law per cell for one state block."""
    cells = pair_idx.shape[0]
    out = np.empty((cells, law.card_Z ** s_block.size))
    for c in range(cells):
        rows = [law.t_z[pair_idx[c, t], s_block[t]] for t in range(s_block.size)]
        out[c] = reduce(np.kron, rows)
    return out


def exact_leakage(
    wtc: SdWtc, aux: Auxiliary, cfg: SimConfig, law: SchemeLaw | None = None,
    cb: Codebook | None = None,
) -> float:
    """Exact leaked information I(M, K; Z-block) under a uniform message.

    Monte Carlo plug-in estimates of block mutual information are hopelessly
    biased at these scales, so leakage is exact-only; outside exact mode the
    report omits it. State blocks on which encoding fails carry no index
    choice; the joint is conditioned on the successful-encoding event.
    """
    law = law or SchemeLaw.from_components(wtc, aux)
    cb = cb or generate_codebook(law.q_u, law.q_vgu, cfg)
    _check_exact_budget(cfg, law, z_factor=True)
    size_i, size_j, size_k, size_m = cb.sizes
    s_blocks = _state_blocks(law.card_S, cfg.n)
    block_probs = law.state[s_blocks].prod(axis=1)
    n_z = law.card_Z**cfg.n
    p_mkz = np.zeros((size_m * size_k, n_z))
    for m in range(size_m):
        pair_idx = cb.pair_index(m)
        post = _cell_posteriors(law, cb, m, s_blocks)
        for b in range(s_blocks.shape[0]):
            if block_probs[b] <= 0 or post[b].sum() <= 0:
                continue
            z_laws = _cell_z_laws(law, pair_idx, s_blocks[b])
            weights = block_probs[b] * post[b]
            contrib = weights[:, None] * z_laws
            by_k = contrib.reshape(size_i, size_j, size_k, n_z).sum(axis=(0, 1))
            p_mkz[m * size_k : (m + 1) * size_k] += by_k / size_m
    total = p_mkz.sum()
    if total <= 0:
        return 0.0
    p_mkz = p_mkz / total
    p_mk = p_mkz.sum(axis=1)
    p_z = p_mkz.sum(axis=0)
    mask = p_mkz > 0
    ratio = p_mkz[mask] / (np.outer(p_mk, p_z)[mask])
    value = float((p_mkz[mask] * np.log2(ratio)).sum())
    return max(0.0, value)


def divergence_surrogate(
    wtc: SdWtc, aux: Auxiliary, cfg: SimConfig, law: SchemeLaw | None = None,
    cb: Codebook | None = None,
) -> float:
    """Worst-case per-(m,k) divergence of the eavesdropper block law from the
    single-letter product target, averaged over the inner index.

    Computed under the idealized block law (state drawn from the cell's
    reverse law), where it upper-bounds the semantic leakage; reported as an
    exact-mode diagnostic.
    """
    law = law or SchemeLaw.from_components(wtc, aux)
    cb = cb or generate_codebook(law.q_u, law.q_vgu, cfg)
    _check_exact_budget(cfg, law, z_factor=True)
    size_i, size_j, size_k, size_m = cb.sizes
    worst = 0.0
    for m in range(size_m):
        for k in range(size_k):
            acc = 0.0
            for i in range(size_i):
                u_word = cb.u_words[i]
                target = reduce(np.kron, [law.q_zgu[u_word[t]] for t in range(cfg.n)])
                mix = np.zeros(law.card_Z**cfg.n)
                for j in range(size_j):
                    uv = u_word * law.card_V + cb.v_words[i, j, k, m]
                    rows = [law.q_zguv[uv[t]] for t in range(cfg.n)]
                    mix += reduce(np.kron, rows) / size_j
                pos = mix > 0
                if np.any(target[pos] <= 0):
                    return math.inf
                acc += float(
                    (mix[pos] * (np.log2(mix[pos]) - np.log2(target[pos]))).sum()
                ) / size_i
            worst = max(worst, acc)
    return worst
