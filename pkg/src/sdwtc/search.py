"""Seeded auxiliary search over the rate formulas.

The rate expressions are unions over conditional PMFs with no optimizer given,
so this module supplies one: random restarts with Dirichlet(1,...,1) row
initialization followed by coordinate-wise perturbation hill climbing with a
geometrically shrinking step (halved after repeated failures, ten shrink
levels).

Each restart climbs a fixed scalarization of the (R_M intercept, sum
intercept) pair whose weight is derived from the restart index alone, never
from ``cfg.weight``; the configured weight only selects the argmax over the
full evaluated stream. For a fixed seed, every weight therefore sees the
identical candidate set. Restarts are independently seeded from
(seed, family, restart index) and the merge is order-independent (max
objective, ties broken by the lexicographic order of the serialized
candidate), so results do not depend on scheduling.
"""

from __future__ import annotations

import hashlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import inf

import numpy as np

from .errors import ValidationError
from .prob import Auxiliary, CondKernel, SdWtc, assemble_joint
from .regions import (
    RegionBounds,
    intercepts,
    region_a,
    region_per,
    region_polygon,
)

_FAMILY_IDS = {
    "general": 1,
    "independent_inner": 2,
    "gp": 3,
    "layered_markov": 4,
    "separated": 5,
}

_INITIAL_STEP = 0.5
_SHRINK_LEVELS = 10
_PATIENCE = 15


@dataclass(frozen=True)
class SearchConfig:
    """Search budget and objective weighting.

    ``weight`` scalarizes the two intercepts as
    weight * (R_M intercept) + (1 - weight) * (sum intercept).
    ``require_eavesdropper_favored_inner`` optionally restricts candidates to
    those whose inner layer is at least as visible to the eavesdropper as to
    the decoder and the state (I(U;Z) >= max{I(U;Y), I(U;S)}); off by default.
    """

    card_u: int = 4
    card_v: int = 8
    restarts: int = 32
    steps: int = 400
    seed: int = 0
    weight: float = 0.5
    require_eavesdropper_favored_inner: bool = False
    workers: int = 1

    def __post_init__(self):
        if self.card_u < 1 or self.card_v < 1:
            raise ValidationError("cardinalities must be >= 1")
        if self.restarts < 1 or self.steps < 1:
            raise ValidationError("restarts and steps must be >= 1")
        if not 0.0 <= self.weight <= 1.0:
            raise ValidationError(f"weight must lie in [0,1], got {self.weight}")


@dataclass
class SearchResult:
    aux: Auxiliary | None
    bounds: RegionBounds | None
    objective: float
    rm_intercept: float
    sum_intercept: float
    evaluations: int
    stream_digest: str
    params_digest: str
    pareto_points: list[tuple[float, float]] = field(default_factory=list)


# ---------------------------------------------------------------------------
# Fast information arithmetic on raw mass arrays (hot path)
# ---------------------------------------------------------------------------


def _h(m: np.ndarray) -> float:
    m = m.reshape(-1)
    pos = m[m > 1e-300]
    return float(-(pos * np.log2(pos)).sum())


def _bounds_general(m5: np.ndarray) -> tuple[float, float, float]:
    """(b1, b2, b3) from a raw [S,U,V,Y,Z] mass array (X summed out)."""
    m_suv = m5.sum(axis=(3, 4))
    m_uvy = m5.sum(axis=(0, 4))
    m_uvz = m5.sum(axis=(0, 3))
    m_uv = m_suv.sum(axis=0)
    h_u = _h(m_uv.sum(axis=1))
    h_s = _h(m_suv.sum(axis=(1, 2)))
    h_y = _h(m_uvy.sum(axis=(0, 1)))
    h_uv = _h(m_uv)
    h_su = _h(m_suv.sum(axis=2))
    h_uy = _h(m_uvy.sum(axis=1))
    h_uz = _h(m_uvz.sum(axis=1))
    h_suv = _h(m_suv)
    h_uvy = _h(m_uvy)
    h_uvz = _h(m_uvz)
    i_uv_y = h_uv + h_y - h_uvy
    i_uv_s = h_uv + h_s - h_suv
    i_v_y_u = h_uv + h_uy - h_uvy - h_u
    i_v_z_u = h_uv + h_uz - h_uvz - h_u
    i_u_s = h_u + h_s - h_su
    return (i_uv_y - i_uv_s, i_v_y_u - i_v_z_u, i_uv_y - i_v_z_u - i_u_s)


def _intercept_pair(b1: float, b2: float, b3: float) -> tuple[float, float]:
    m2 = min(b2, b3)
    if b1 < -1e-9 or m2 < -1e-9:
        return (0.0, 0.0)
    return (max(0.0, min(b1, m2)), max(0.0, m2))


# ---------------------------------------------------------------------------
# Candidate parameterizations per scheme family
# ---------------------------------------------------------------------------


class _Family:
    """One scheme family: init/perturb/evaluate over simplex-row parameters."""

    def __init__(self, wtc: SdWtc, cfg: SearchConfig, name: str):
        self.wtc = wtc
        self.cfg = cfg
        self.name = name
        self.state = wtc.state_law.probs
        self.trans = wtc.transition()
        self.w2 = self.state[:, None, None, None] * self.trans
        s, x = wtc.card_S, wtc.card_X
        u, v = cfg.card_u, cfg.card_v
        if name == "general":
            self.blocks = {"rows": (s, u * v * x)}
        elif name == "independent_inner":
            self.blocks = {"pu": (1, u), "rows": (u * s, v * x)}
        elif name == "gp":
            self.blocks = {"rows": (s, u * x)}
        elif name == "layered_markov":
            self.blocks = {"rows_vx": (s, v * x), "rows_u": (v, u)}
        elif name == "separated":
            if not np.allclose(self.trans, self.trans[0:1], atol=1e-12):
                raise ValidationError(
                    "separated source-channel scheme requires a state-independent "
                    "transition kernel"
                )
            self.blocks = {"pqt": (1, u * v), "rows_x": (v, x)}
        else:
            raise ValidationError(f"unknown search family {name!r}")

    def init(self, rng: np.random.Generator) -> dict[str, np.ndarray]:
        return {
            key: rng.dirichlet(np.ones(cols), size=rows)
            for key, (rows, cols) in self.blocks.items()
        }

    def perturb(self, params, rng: np.random.Generator, step: float):
        names = sorted(params)
        key = names[int(rng.integers(len(names)))]
        block = params[key].copy()
        r = int(rng.integers(block.shape[0]))
        row = block[r].copy()
        move = rng.random()
        if move < 0.65:
            c = int(rng.integers(row.size))
            if rng.random() < 0.5:
                row[c] += step
            else:
                row[c] = max(0.0, row[c] - step)
            total = row.sum()
            row = np.full_like(row, 1.0 / row.size) if total <= 0.0 else row / total
        elif move < 0.75 and row.size >= 2:
            c = int(rng.integers(row.size))
            row[c] = 0.0
            total = row.sum()
            row = np.full_like(row, 1.0 / row.size) if total <= 0.0 else row / total
        elif move < 0.85:
            row[:] = 0.0
            row[int(np.argmax(block[r]))] = 1.0
        elif move < 0.95 and row.size >= 2:
            top = np.argsort(block[r])[-2:]
            row[:] = 0.0
            row[top] = 0.5
        else:
            row = block[int(rng.integers(block.shape[0]))].copy()
        block[r] = row
        out = dict(params)
        out[key] = block
        return out

    # -- raw fast evaluation ------------------------------------------------

    def _table(self, params) -> np.ndarray:
        """Auxiliary as a dense [S, U, V, X] table."""
        s, x = self.wtc.card_S, self.wtc.card_X
        u, v = self.cfg.card_u, self.cfg.card_v
        if self.name == "general":
            return params["rows"].reshape(s, u, v, x)
        if self.name == "independent_inner":
            cond = params["rows"].reshape(u, s, v, x)
            return np.einsum("u,usvx->suvx", params["pu"][0], cond)
        if self.name == "gp":
            return params["rows"].reshape(s, u, 1, x)
        if self.name == "layered_markov":
            vx = params["rows_vx"].reshape(s, self.cfg.card_v, x)
            return np.einsum("svx,vu->suvx", vx, params["rows_u"])
        raise ValidationError(f"family {self.name} has no auxiliary form")

    def raw_eval(self, params):
        """((rm, sum) clamped intercepts, signed pair for climb acceptance).

        The signed pair keeps negative bounds so the climb has a gradient out
        of empty-region plateaus; reported intercepts are clamped.
        """
        if self.name == "separated":
            return self._eval_separated(params)
        m5 = np.einsum("suvx,sxyz->suvyz", self._table(params), self.w2)
        b1, b2, b3 = _bounds_general(m5)
        if self.name == "independent_inner":
            return _intercept_pair(b1, b2, inf), (min(b1, b2), b2)
        if self.name == "gp":
            g = max(0.0, b1)
            return (g, g), (b1, b1)
        if self.name == "layered_markov":
            # Degenerate-side-information feasibility; infeasibility is scored
            # negatively so the climb can walk back into the feasible set.
            i_us, i_uy, i_uz, i_vs_u, i_vy_u = self._inner_terms(m5)
            violation = max(0.0, i_us - i_uy) + max(0.0, i_vs_u - i_vy_u)
            if violation > 1e-9:
                bad = -1.0 - violation
                return (bad, bad), (bad, bad)
            return (0.0, max(0.0, b2)), (0.0, b2)
        if self.cfg.require_eavesdropper_favored_inner:
            i_us, i_uy, i_uz, _, _ = self._inner_terms(m5)
            gap = max(i_uy, i_us) - i_uz
            if gap > 1e-9:
                bad = -1.0 - gap
                return (bad, bad), (bad, bad)
        m2 = min(b2, b3)
        return _intercept_pair(b1, b2, b3), (min(b1, m2), m2)

    @staticmethod
    def _inner_terms(m5):
        """I(U;S), I(U;Y), I(U;Z), I(V;S|U), I(V;Y|U) from [S,U,V,Y,Z] mass."""
        m_suv = m5.sum(axis=(3, 4))
        m_uvy = m5.sum(axis=(0, 4))
        m_su = m_suv.sum(axis=2)
        m_uy = m_uvy.sum(axis=1)
        m_uz = m5.sum(axis=(0, 2, 3))
        m_uv = m_suv.sum(axis=0)
        h_u = _h(m_su.sum(axis=0))
        h_s = _h(m_su.sum(axis=1))
        h_y = _h(m_uy.sum(axis=0))
        h_z = _h(m_uz.sum(axis=0))
        h_su, h_uy, h_uz, h_uv = _h(m_su), _h(m_uy), _h(m_uz), _h(m_uv)
        h_suv, h_uvy = _h(m_suv), _h(m_uvy)
        i_us = h_u + h_s - h_su
        i_uy = h_u + h_y - h_uy
        i_uz = h_u + h_z - h_uz
        i_vs_u = h_su + h_uv - h_suv - h_u
        i_vy_u = h_uy + h_uv - h_uvy - h_u
        return i_us, i_uy, i_uz, i_vs_u, i_vy_u

    def _eval_separated(self, params):
        q, t = self.cfg.card_u, self.cfg.card_v
        w = self.trans[0]
        pqt = params["pqt"][0].reshape(q, t)
        mass = np.einsum("qt,tx,xyz->qtxyz", pqt, params["rows_x"], w)
        m_qty = mass.sum(axis=(2, 4))
        m_qtz = mass.sum(axis=(2, 3))
        m_qt = m_qty.sum(axis=2)
        h_q = _h(m_qt.sum(axis=1))
        h_qt = _h(m_qt)
        h_qy = _h(m_qty.sum(axis=1))
        h_qz = _h(m_qtz.sum(axis=1))
        h_qty_, h_qtz_ = _h(m_qty), _h(m_qtz)
        val = (h_qt + h_qy - h_qty_ - h_q) - (h_qt + h_qz - h_qtz_ - h_q)
        return (0.0, max(0.0, val)), (0.0, val)

    # -- validated finalization for the winner --------------------------------

    def finalize(self, params):
        """(aux, bounds, joint) through the validated public path."""
        if self.name == "separated":
            return None, None, None
        table = self._table(params)
        v = 1 if self.name == "gp" else self.cfg.card_v
        aux = Auxiliary(
            card_U=self.cfg.card_u,
            card_V=v,
            kernel=CondKernel(
                (self.wtc.card_S,), self.cfg.card_u * v * self.wtc.card_X,
                table.reshape(self.wtc.card_S, -1),
            ),
        )
        j = assemble_joint(self.wtc, aux)
        if self.name == "independent_inner":
            return aux, region_per(j), j
        return aux, region_a(j), j

    @staticmethod
    def serialize(params) -> bytes:
        return b"\x00".join(params[k].tobytes() for k in sorted(params))


# ---------------------------------------------------------------------------
# Climb, merge, frontier
# ---------------------------------------------------------------------------


def _restart_weight(restart: int) -> float:
    """Per-restart climb scalarization; a function of the index only."""
    return (restart % 11) / 10.0


class _Tracker:
    """Order-independent running argmax + Pareto set over the stream."""

    def __init__(self, weight: float):
        self.weight = weight
        self.count = 0
        self.digest_acc = 0
        self.best = None  # (obj, ser, params, rm, sm)
        self.pareto: list[tuple[float, float, bytes, dict]] = []

    def offer(self, ser: bytes, params, rm: float, sm: float):
        self.count += 1
        h = int.from_bytes(hashlib.sha256(ser).digest()[:16], "big")
        self.digest_acc = (self.digest_acc + h) % (1 << 128)
        obj = self.weight * rm + (1.0 - self.weight) * sm
        if self.best is None or obj > self.best[0] or (
            obj == self.best[0] and ser < self.best[1]
        ):
            self.best = (obj, ser, params, rm, sm)
        self._offer_pareto((rm, sm, ser, params))

    def _offer_pareto(self, entry):
        rm, sm = entry[0], entry[1]
        for p in self.pareto:
            if p[0] >= rm and p[1] >= sm and (p[0] > rm or p[1] > sm or p[2] <= entry[2]):
                return
        self.pareto = [p for p in self.pareto if not (rm >= p[0] and sm >= p[1])]
        self.pareto.append(entry)

    def merge(self, other: "_Tracker"):
        self.count += other.count
        self.digest_acc = (self.digest_acc + other.digest_acc) % (1 << 128)
        if other.best is not None:
            b = other.best
            if self.best is None or b[0] > self.best[0] or (
                b[0] == self.best[0] and b[1] < self.best[1]
            ):
                self.best = b
        for p in other.pareto:
            self._offer_pareto(p)


def _run_restart(family: _Family, cfg: SearchConfig, restart: int) -> _Tracker:
    rng = np.random.default_rng((cfg.seed, _FAMILY_IDS[family.name], restart))
    lam = _restart_weight(restart)
    tracker = _Tracker(cfg.weight)
    params = family.init(rng)
    (rm, sm), (crm, csm) = family.raw_eval(params)
    tracker.offer(family.serialize(params), params, rm, sm)
    score = lam * crm + (1.0 - lam) * csm
    step = _INITIAL_STEP
    fails = 0
    shrinks = 0
    for _ in range(cfg.steps):
        cand = family.perturb(params, rng, step)
        (rm, sm), (crm, csm) = family.raw_eval(cand)
        tracker.offer(family.serialize(cand), cand, rm, sm)
        cand_score = lam * crm + (1.0 - lam) * csm
        if cand_score > score:
            params, score = cand, cand_score
            fails = 0
        else:
            fails += 1
            if fails >= _PATIENCE:
                fails = 0
                shrinks += 1
                if shrinks > _SHRINK_LEVELS:
                    break
                step *= 0.5
    return tracker


def _collect(wtc: SdWtc, cfg: SearchConfig, family: str) -> tuple[_Family, _Tracker]:
    fam = _Family(wtc, cfg, family)
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            trackers = list(
                pool.map(lambda r: _run_restart(fam, cfg, r), range(cfg.restarts))
            )
    else:
        trackers = [_run_restart(fam, cfg, r) for r in range(cfg.restarts)]
    total = _Tracker(cfg.weight)
    for t in trackers:
        total.merge(t)
    return fam, total


def _result_from(fam: _Family, total: "_Tracker") -> SearchResult:
    obj, ser, params, rm, sm = total.best
    aux, bounds, _ = fam.finalize(params)
    return SearchResult(
        aux=aux,
        bounds=bounds,
        objective=obj,
        rm_intercept=rm,
        sum_intercept=sm,
        evaluations=total.count,
        stream_digest=f"{total.digest_acc:032x}",
        params_digest=hashlib.sha256(ser).hexdigest(),
        pareto_points=sorted((p[0], p[1]) for p in total.pareto),
    )


def search(wtc: SdWtc, cfg: SearchConfig, family: str = "general") -> SearchResult:
    """Best-found auxiliary under the scalarized intercept objective.

    Deterministic given (wtc, cfg, family); never worse than the best of the
    initial restarts, since every evaluated candidate enters the stream.
    """
    fam, total = _collect(wtc, cfg, family)
    return _result_from(fam, total)


def _hull(points: list[tuple[float, float]]) -> list[tuple[float, float]]:
    """Convex hull (monotone chain), counterclockwise."""
    pts = sorted(set(points))
    if len(pts) <= 2:
        return pts

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: list[tuple[float, float]] = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[tuple[float, float]] = []
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


def _frontier_payload(fam: _Family, total: "_Tracker") -> dict:
    vertices: list[tuple[float, float]] = [(0.0, 0.0)]
    picks = []
    for lam10 in range(11):
        lam = lam10 / 10.0
        best = None
        for rm, sm, ser, params in total.pareto:
            obj = lam * rm + (1 - lam) * sm
            if best is None or obj > best[0] or (obj == best[0] and ser < best[1]):
                best = (obj, ser, rm, sm, params)
        _, _, rm, sm, params = best
        picks.append({"weight": lam, "rm_intercept": rm, "sum_intercept": sm})
        vertices.append((rm, 0.0))
        vertices.append((0.0, sm))
        _, bounds, _ = fam.finalize(params)
        if bounds is not None:
            vertices.extend(region_polygon(bounds))
    return {"sweep": picks, "hull": _hull(vertices)}


def frontier(wtc: SdWtc, cfg: SearchConfig, family: str = "general") -> dict:
    """Searched trade-off frontier: one pass, then an argmax per sweep weight.

    Sweeps the selection weight over {0, 0.1, ..., 1.0} on the single
    evaluated stream, collects the winning intercept pair per weight plus each
    winner's region corners, and returns the convex hull of the collected
    vertices (with the origin).
    """
    fam, total = _collect(wtc, cfg, family)
    return _frontier_payload(fam, total)


def search_with_frontier(
    wtc: SdWtc, cfg: SearchConfig, family: str = "general"
) -> tuple[SearchResult, dict]:
    """One collection pass serving both the best result and the sweep."""
    fam, total = _collect(wtc, cfg, family)
    return _result_from(fam, total), _frontier_payload(fam, total)
