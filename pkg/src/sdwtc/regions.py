"""Achievable-rate formulas over assembled joints.

Every evaluator takes a dense joint PMF with the canonical axis names
(S, U, V, X, Y, Z) — or the documented axis sets for the source-channel
variants — and returns rate bounds in bits. Evaluators are pure functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InfeasibleError, ValidationError
from .prob import JointPmf

#: Slack used by membership checks (strict inequalities are meaningless in floats).
MEMBERSHIP_TOL = 1e-9

#: Independence tolerance on I(U;S) for the independent-inner-layer scheme.
U_INDEP_TOL = 1e-6


@dataclass(frozen=True)
class RegionBounds:
    """The three scalar caps defining a message/key rate polytope.

    ``b1`` caps R_M, ``b2`` and ``b3`` cap R_M + R_K. ``b3 = math.inf`` is an
    explicit "unbounded" flag (used by the independent-inner-layer region,
    whose third bound does not exist). Negative bounds are kept as-is; they
    are clamped only at membership / intercept level.
    """

    b1: float
    b2: float
    b3: float

    @property
    def sum_cap(self) -> float:
        return min(self.b2, self.b3)

    @property
    def is_empty(self) -> bool:
        return self.b1 < -MEMBERSHIP_TOL or self.sum_cap < -MEMBERSHIP_TOL


@dataclass(frozen=True)
class FmeWitness:
    """Feasible auxiliary rate pair for the layered-code rate conditions."""

    r1: float
    r2: float
    slack: float


@dataclass(frozen=True)
class EquivocationCaps:
    """Caps of the rate-equivocation region at a fixed joint.

    A pair (R, R_E) is admitted iff R <= b1, R_E <= R, R_E <= b2, R_E <= b3.
    """

    b1: float
    b2: float
    b3: float

    @property
    def caps(self) -> tuple[float, float, float, float]:
        """(cap on R, the structural R_E<=R marker, cap on R_E, cap on R_E)."""
        return (self.b1, math.nan, self.b2, self.b3)

    def max_equivocation(self, r: float) -> float:
        return min(r, self.b2, self.b3)

    def feasible(self, r: float, r_e: float) -> bool:
        if r < 0 or r_e < 0:
            raise ValidationError("rates must be nonnegative")
        return (
            r <= self.b1 + MEMBERSHIP_TOL
            and r_e <= r + MEMBERSHIP_TOL
            and r_e <= min(self.b2, self.b3) + MEMBERSHIP_TOL
        )


def _terms(j: JointPmf) -> dict[str, float]:
    return {
        "uv_y": j.mutual_information(["U", "V"], ["Y"]),
        "uv_s": j.mutual_information(["U", "V"], ["S"]),
        "v_y_u": j.mutual_information(["V"], ["Y"], ["U"]),
        "v_z_u": j.mutual_information(["V"], ["Z"], ["U"]),
        "u_s": j.mutual_information(["U"], ["S"]),
    }


def region_a(j: JointPmf) -> RegionBounds:
    """Message/key bounds of the layered scheme at one auxiliary choice.

    b1 = I(U,V;Y) - I(U,V;S);  b2 = I(V;Y|U) - I(V;Z|U);
    b3 = I(U,V;Y) - I(V;Z|U) - I(U;S).
    """
    t = _terms(j)
    return RegionBounds(
        b1=t["uv_y"] - t["uv_s"],
        b2=t["v_y_u"] - t["v_z_u"],
        b3=t["uv_y"] - t["v_z_u"] - t["u_s"],
    )


def sum_bound_alt(j: JointPmf) -> float:
    """Alternative single-expression form of the sum-rate cap.

    I(U,V;Y) - I(U,V;Z) - max{I(U;Y), I(U;S)} + I(U;Z); algebraically equal
    to min(b2, b3) of :func:`region_a`.
    """
    uv_y = j.mutual_information(["U", "V"], ["Y"])
    uv_z = j.mutual_information(["U", "V"], ["Z"])
    u_y = j.mutual_information(["U"], ["Y"])
    u_s = j.mutual_information(["U"], ["S"])
    u_z = j.mutual_information(["U"], ["Z"])
    return uv_y - uv_z - max(u_y, u_s) + u_z


def region_per(j: JointPmf) -> RegionBounds:
    """Bounds of the independent-inner-layer scheme (U independent of S).

    The scheme requires I(U;S) = 0; dependence beyond ``U_INDEP_TOL`` is
    rejected. The third cap does not exist for this scheme: b3 is the
    explicit unbounded flag ``math.inf``.
    """
    i_us = j.mutual_information(["U"], ["S"])
    if i_us > U_INDEP_TOL:
        raise InfeasibleError(
            f"inner auxiliary depends on the state: I(U;S) = {i_us:.3g} bits "
            f"exceeds {U_INDEP_TOL}",
            value=i_us,
        )
    t = _terms(j)
    return RegionBounds(
        b1=t["uv_y"] - t["uv_s"],
        b2=t["v_y_u"] - t["v_z_u"],
        b3=math.inf,
    )


def message_rate_projection(j: JointPmf) -> float:
    """Secret-message rate at this auxiliary: min of the three caps.

    Equals the R_M-axis intercept of :func:`region_a` whenever the region is
    nonempty.
    """
    b = region_a(j)
    return min(b.b1, b.b2, b.b3)


def equivocation_region(j: JointPmf) -> EquivocationCaps:
    """Caps of the rate-equivocation region at this auxiliary."""
    b = region_a(j)
    return EquivocationCaps(b1=b.b1, b2=b.b2, b3=b.b3)


def membership(b: RegionBounds, r_m: float, r_k: float) -> bool:
    """Whether (r_m, r_k) lies in the polytope (with 1e-9 slack)."""
    if r_m < 0 or r_k < 0:
        raise ValidationError(f"rates must be nonnegative, got ({r_m}, {r_k})")
    return r_m <= b.b1 + MEMBERSHIP_TOL and r_m + r_k <= b.sum_cap + MEMBERSHIP_TOL


def intercepts(b: RegionBounds) -> tuple[float, float]:
    """(max R_M at R_K = 0, max R_M + R_K), both clamped at 0.

    An empty region yields (0, 0).
    """
    if b.is_empty:
        return (0.0, 0.0)
    return (max(0.0, min(b.b1, b.sum_cap)), max(0.0, b.sum_cap))


def region_polygon(b: RegionBounds) -> list[tuple[float, float]]:
    """Ordered vertices of the (R_M, R_K) polytope, for plotting."""
    if b.is_empty:
        return [(0.0, 0.0)]
    m2 = max(0.0, b.sum_cap)
    b1 = max(0.0, b.b1)
    if b1 >= m2:
        return [(0.0, 0.0), (m2, 0.0), (0.0, m2)]
    return [(0.0, 0.0), (b1, 0.0), (b1, m2 - b1), (0.0, m2)]


def fme_witness(
    j: JointPmf, r_m: float, r_k: float, slack: float = 1e-6
) -> FmeWitness | None:
    """Feasible (r1, r2) for the layered-code rate conditions, if any.

    The conditions, each padded by ``slack`` (the underlying inequalities are
    strict):

        r1 >= I(U;S) + slack
        r1 + r2 + r_k >= I(U,V;S) + slack
        r2 >= I(V;Z|U) + slack
        r_m + r_k + r2 <= I(V;Y|U) - slack
        r_m + r_k + r1 + r2 <= I(U,V;Y) - slack
        r1, r2 >= 0

    Eliminating (r1, r2) from this system recovers exactly the three caps of
    :func:`region_a`; a returned witness certifies the rate pair from inside
    the proof-level system. Absence is a valid return, not an error.
    """
    if slack <= 0:
        raise ValidationError("slack must be positive")
    t = _terms(j)
    a = max(t["u_s"] + slack, 0.0)  # lower bound on r1
    bb = max(t["v_z_u"] + slack, 0.0)  # lower bound on r2
    c = t["uv_s"] + slack - r_k  # lower bound on r1 + r2
    d = t["v_y_u"] - slack - r_m - r_k  # upper bound on r2
    e = t["uv_y"] - slack - r_m - r_k  # upper bound on r1 + r2
    # r2's window tightens as r1 grows only through e; the c-bound relaxes.
    # Two candidate r1 values cover the feasibility question.
    for r1 in (a, max(a, c - bb)):
        lo = max(bb, c - r1)
        hi = min(d, e - r1)
        if lo <= hi:
            return FmeWitness(r1=r1, r2=lo, slack=slack)
    return None


# ---------------------------------------------------------------------------
# Source-channel schemes with decoder / eavesdropper side information
# ---------------------------------------------------------------------------


def key_rate_joint_coding(j: JointPmf) -> float:
    """Key rate of the joint source-channel scheme.

    Expects axes (Sx, U, V, X, Sy, Y, Sz, Z): Sx is the encoder's source, the
    decoder observes (Sy, Y) and the eavesdropper (Sz, Z). Feasibility
    requires I(U;Sx) <= I(U;Sy,Y) and I(V;Sx|U) <= I(V;Sy,Y|U); the value is
    I(V;Sy,Y|U) - I(V;Sz,Z|U).
    """
    fe1 = j.mutual_information(["U"], ["Sx"]) - j.mutual_information(["U"], ["Sy", "Y"])
    if fe1 > MEMBERSHIP_TOL:
        raise InfeasibleError(
            f"inner layer not resolvable at the decoder: I(U;Sx) - I(U;Sy,Y) = {fe1:.3g}",
            value=fe1,
        )
    fe2 = j.mutual_information(["V"], ["Sx"], ["U"]) - j.mutual_information(
        ["V"], ["Sy", "Y"], ["U"]
    )
    if fe2 > MEMBERSHIP_TOL:
        raise InfeasibleError(
            f"outer layer not resolvable at the decoder: I(V;Sx|U) - I(V;Sy,Y|U) = {fe2:.3g}",
            value=fe2,
        )
    return j.mutual_information(["V"], ["Sy", "Y"], ["U"]) - j.mutual_information(
        ["V"], ["Sz", "Z"], ["U"]
    )


def key_rate_separate_coding(source_j: JointPmf, channel_j: JointPmf) -> float:
    """Key rate of the separation-based source-channel scheme.

    ``source_j`` has axes (Sx, Sy, Sz, U, V); ``channel_j`` has axes
    (Q, T, X, Y, Z); the two blocks are treated as independent. Feasibility
    requires I(U;Sx|Sy) <= I(Q;Y) and I(V;Sx|Sy) <= I(T;Y); the value is
    [I(T;Y|Q) - I(T;Z|Q)] + [I(V;Sy|U) - I(V;Sz|U)].
    """
    fe1 = source_j.mutual_information(["U"], ["Sx"], ["Sy"]) - channel_j.mutual_information(
        ["Q"], ["Y"]
    )
    if fe1 > MEMBERSHIP_TOL:
        raise InfeasibleError(
            f"inner description exceeds the channel: I(U;Sx|Sy) - I(Q;Y) = {fe1:.3g}",
            value=fe1,
        )
    fe2 = source_j.mutual_information(["V"], ["Sx"], ["Sy"]) - channel_j.mutual_information(
        ["T"], ["Y"]
    )
    if fe2 > MEMBERSHIP_TOL:
        raise InfeasibleError(
            f"outer description exceeds the channel: I(V;Sx|Sy) - I(T;Y) = {fe2:.3g}",
            value=fe2,
        )
    wiretap_term = channel_j.mutual_information(["T"], ["Y"], ["Q"]) - channel_j.mutual_information(
        ["T"], ["Z"], ["Q"]
    )
    source_term = source_j.mutual_information(["V"], ["Sy"], ["U"]) - source_j.mutual_information(
        ["V"], ["Sz"], ["U"]
    )
    return wiretap_term + source_term
