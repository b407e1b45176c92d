"""Example channels with analytic baselines, plus reference auxiliaries.

The stuck-at-memory example: a ternary-state deterministic memory cell whose
output passes through a binary erasure channel, with the eavesdropper
observing the (state, input) pair noiselessly and the legitimate parties
sharing an external key stream. The composite construction (key folded into
the state and into the decoder's observation) is built from an explicitly
degraded base channel, so the eavesdropper-advantage hypothesis holds by
construction. The erasure symbol is always the last index of the core output
alphabet.

Also here: the two-coin key-agreement counterexample report and the exact
analytic values attached to the stuck-at example.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BudgetError, ValidationError
from .prob import (
    Auxiliary,
    CondKernel,
    FinitePmf,
    JointPmf,
    SdWtc,
    assemble_joint,
    binary_entropy,
    binary_entropy_inv,
    cell_budget,
)
from .search import SearchConfig, search


@dataclass(frozen=True)
class MsafParams:
    """Parameter triple of the stuck-at example; each lies in (0, 0.5).

    When derived from sigma alone: epsilon = [h(sigma/2) - sigma] / 2 and
    lam = h^{-1}(1 - sigma - epsilon).
    """

    sigma: float
    epsilon: float
    lam: float

    def __post_init__(self):
        for name, val in (("sigma", self.sigma), ("epsilon", self.epsilon), ("lam", self.lam)):
            if not 0.0 < val < 0.5:
                raise ValidationError(f"MsafParams: {name}={val!r} outside (0, 0.5)")

    @classmethod
    def from_sigma(cls, sigma: float) -> "MsafParams":
        if not 0.0 < sigma < 0.5:
            raise ValidationError(f"sigma={sigma!r} outside (0, 0.5)")
        epsilon = 0.5 * (binary_entropy(sigma / 2.0) - sigma)
        lam = binary_entropy_inv(1.0 - sigma - epsilon)
        return cls(sigma=sigma, epsilon=epsilon, lam=lam)


@dataclass(frozen=True)
class MsafAnalytics:
    """Closed-form baselines of the stuck-at example.

    capacity = 1 - sigma - epsilon (the full secrecy capacity, equal to the
    key entropy h(lam)); gp_capacity = (1-sigma)(1-epsilon) (best reliable
    rate with non-causal state knowledge, no secrecy constraint);
    causal_bound = 1 - h(sigma/2) (what state-independent inner strategies
    can support).
    """

    capacity: float
    gp_capacity: float
    causal_bound: float
    key_entropy: float


def msaf_analytics(params: MsafParams) -> MsafAnalytics:
    return MsafAnalytics(
        capacity=1.0 - params.sigma - params.epsilon,
        gp_capacity=(1.0 - params.sigma) * (1.0 - params.epsilon),
        causal_bound=1.0 - binary_entropy(params.sigma / 2.0),
        key_entropy=binary_entropy(params.lam),
    )


# ---------------------------------------------------------------------------
# Degraded-by-construction bases and the key composite
# ---------------------------------------------------------------------------


def degraded_base(
    state_law: FinitePmf,
    card_X: int,
    z_kernel: CondKernel,
    garbling: CondKernel,
) -> SdWtc:
    """Base channel whose decoder output is an explicit garbling of Z.

    W(y,z|s,x) = W_Z(z|s,x) * Gamma(y|z). The explicit garbling certifies the
    eavesdropper-advantage (less noisy) hypothesis by construction; no generic
    ordering test is performed.
    """
    card_S = state_law.support_size
    if z_kernel.input_shape != (card_S, card_X):
        raise ValidationError(
            f"z_kernel input shape {z_kernel.input_shape} != ({card_S},{card_X})"
        )
    card_Z = z_kernel.output_size
    if garbling.input_shape != (card_Z,):
        raise ValidationError(
            f"garbling input shape {garbling.input_shape} != ({card_Z},)"
        )
    card_Y = garbling.output_size
    wz = z_kernel.rows.reshape(card_S, card_X, card_Z)
    rows = np.einsum("sxz,zy->sxyz", wz, garbling.rows).reshape(
        card_S * card_X, card_Y * card_Z
    )
    return SdWtc(
        state_law=state_law,
        kernel=CondKernel((card_S, card_X), card_Y * card_Z, rows),
        card_Y=card_Y,
        card_Z=card_Z,
        degraded_by_construction=True,
    )


def build_less_noisy_with_key(base: SdWtc, key_law: FinitePmf) -> SdWtc:
    """Fold an external key into a degraded-base channel.

    Composite state (L,S) with product law key_law x W_S; composite decoder
    output (L,Y) with the key reproduced exactly; Z unchanged. Indices are
    key-major: (l,s) -> l*|S|+s and (l,y) -> l*|Y|+y.
    """
    if not base.degraded_by_construction:
        raise ValidationError(
            "base channel is not flagged degraded-by-construction; "
            "build it via degraded_base()"
        )
    card_L = key_law.support_size
    s_n, x_n, y_n, z_n = base.card_S, base.card_X, base.card_Y, base.card_Z
    w = base.transition()  # [s, x, y, z]
    rows = np.zeros((card_L * s_n, x_n, card_L * y_n, z_n))
    for ell in range(card_L):
        rows[ell * s_n : (ell + 1) * s_n, :, ell * y_n : (ell + 1) * y_n, :] = w
    state = np.kron(key_law.probs, base.state_law.probs)
    return SdWtc(
        state_law=FinitePmf(state),
        kernel=CondKernel(
            (card_L * s_n, x_n), card_L * y_n * z_n, rows.reshape(card_L * s_n * x_n, -1)
        ),
        card_Y=card_L * y_n,
        card_Z=z_n,
        state_factors={"L": card_L, "S_core": s_n},
        output_factors={"L": card_L, "Y_core": y_n},
    )


# ---------------------------------------------------------------------------
# Stuck-at memory + erasure example
# ---------------------------------------------------------------------------


def _stuck_output(s: int, x: int) -> int:
    return s if s in (0, 1) else x


def msaf_base(sigma: float, epsilon: float) -> SdWtc:
    """Ternary-state stuck-at cell, erased readout, transparent eavesdropper.

    State law (sigma/2, sigma/2, 1-sigma); the cell output g(s,x) is s on a
    stuck cell (s in {0,1}) and x otherwise; the decoder sees g through an
    erasure channel with erasure probability epsilon (erasure symbol = last
    index, 2); the eavesdropper sees z = (s,x) = s*2+x noiselessly.
    """
    state = FinitePmf([sigma / 2.0, sigma / 2.0, 1.0 - sigma])
    z_rows = np.zeros((3 * 2, 6))
    for s in range(3):
        for x in range(2):
            z_rows[s * 2 + x, s * 2 + x] = 1.0
    garble = np.zeros((6, 3))
    for s in range(3):
        for x in range(2):
            g = _stuck_output(s, x)
            garble[s * 2 + x, g] = 1.0 - epsilon
            garble[s * 2 + x, 2] = epsilon
    return degraded_base(
        state_law=state,
        card_X=2,
        z_kernel=CondKernel((3, 2), 6, z_rows),
        garbling=CondKernel((6,), 3, garble),
    )


def build_msaf_example(sigma: float) -> tuple[SdWtc, MsafParams, MsafAnalytics]:
    """Full keyed stuck-at example: composite channel, parameters, baselines."""
    params = MsafParams.from_sigma(sigma)
    base = msaf_base(params.sigma, params.epsilon)
    key = FinitePmf([1.0 - params.lam, params.lam])
    return build_less_noisy_with_key(base, key), params, msaf_analytics(params)


def msaf_reference_aux(params: MsafParams) -> Auxiliary:
    """Capacity-achieving auxiliary for the keyed stuck-at example.

    Inner letter = the cell output g(s,x), outer letter = (inner letter, key),
    channel input uniform and independent of state and key: |U| = 2, |V| = 4,
    with v = 2u + l.
    """
    table = np.zeros((6, 2, 4, 2))
    for ell in range(2):
        for s in range(3):
            for x in range(2):
                u = _stuck_output(s, x)
                v = 2 * u + ell
                table[ell * 3 + s, u, v, x] = 0.5
    return Auxiliary(card_U=2, card_V=4, kernel=CondKernel((6,), 16, table.reshape(6, 16)))


def keyed_capacity_caps(
    base: SdWtc,
    key_law: FinitePmf,
    card_u: int = 4,
    restarts: int = 64,
    steps: int = 200,
    seed: int = 0,
    budget: int | None = None,
) -> tuple[float, float]:
    """Capacity-region caps of the keyed degraded-base instance.

    Returns (r_m_cap, sum_cap): the best-found single-auxiliary reliable-rate
    value I(U;Y)-I(U;S) over the base channel (the key component plays no
    role there), and the key entropy capping R_M + R_K. The best attainable
    pure-message rate is min(r_m_cap, sum_cap).
    """
    if not base.degraded_by_construction:
        raise ValidationError(
            "base channel is not flagged degraded-by-construction; "
            "build it via degraded_base()"
        )
    cells = base.card_S * card_u * base.card_X * base.card_Y * base.card_Z
    limit = cell_budget() if budget is None else budget
    if cells > limit:
        raise BudgetError(f"auxiliary search needs {cells} cells, budget is {limit}")
    cfg = SearchConfig(
        card_u=card_u, card_v=1, restarts=restarts, steps=steps, seed=seed, weight=1.0
    )
    result = search(base, cfg, family="gp")
    return result.objective, key_law.entropy()


# ---------------------------------------------------------------------------
# Two-coin key-agreement counterexample
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CoinReport:
    """Exact single-letter evaluation of the two-coin counterexample.

    ``r_zib`` is the formula value at the prescribed auxiliaries;
    ``cr_upper_bound`` is the common-randomness cap (pipe rate 1 plus the
    state information the decoder's side observation carries); the
    contradiction flag records that the formula meets/exceeds a cap that a
    secrecy-respecting scheme cannot attain.
    """

    r_zib: float
    cr_upper_bound: float
    contradiction: bool
    feasibility_margin: float


def coin_wtc() -> SdWtc:
    """The two-coin setup as a state-dependent channel.

    State s = (a,b) uniform on 4; input x is the private-pipe bit; decoder
    output y = (t, q, x) with t the coin selected by a fresh fair coin q;
    eavesdropper output z = a xor b.
    """
    rows = np.zeros((4 * 2, 8 * 2))
    for a in range(2):
        for b in range(2):
            s = a * 2 + b
            z = a ^ b
            for x in range(2):
                for q in range(2):
                    t = a if q == 0 else b
                    y = t * 4 + q * 2 + x
                    rows[s * 2 + x, y * 2 + z] += 0.5
    return SdWtc(
        state_law=FinitePmf(np.full(4, 0.25)),
        kernel=CondKernel((4, 2), 16, rows),
        card_Y=8,
        card_Z=2,
    )


def coin_reference_aux() -> Auxiliary:
    """Prescribed auxiliaries: inner letter = a xor b, outer = (a, b, pipe bit),
    with the pipe bit fair and independent of the coins."""
    table = np.zeros((4, 2, 8, 2))
    for a in range(2):
        for b in range(2):
            s = a * 2 + b
            u = a ^ b
            for psi in range(2):
                v = s * 2 + psi
                table[s, u, v, psi] = 0.5
    return Auxiliary(card_U=2, card_V=8, kernel=CondKernel((4,), 32, table.reshape(4, 32)))


def coin_counterexample_report() -> CoinReport:
    j = assemble_joint(coin_wtc(), coin_reference_aux())
    r_zib = j.mutual_information(["V"], ["Y"], ["U"]) - j.mutual_information(
        ["V"], ["Z"], ["U"]
    )
    feasibility = j.mutual_information(["V"], ["Y"]) - j.mutual_information(["V"], ["S"])
    # Decoder's state-correlated side observation is the (t, q) part of y.
    mass = np.zeros((4, 4))
    for a in range(2):
        for b in range(2):
            for q in range(2):
                t = a if q == 0 else b
                mass[a * 2 + b, t * 2 + q] += 0.25 * 0.5
    side = JointPmf(("S", "W"), mass)
    cr_upper_bound = 1.0 + side.mutual_information(["S"], ["W"])
    return CoinReport(
        r_zib=r_zib,
        cr_upper_bound=cr_upper_bound,
        contradiction=r_zib + 1e-9 >= cr_upper_bound,
        feasibility_margin=feasibility,
    )
