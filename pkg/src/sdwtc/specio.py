"""Channel and auxiliary spec files.

Both formats are strict JSON, UTF-8, one document per file; the parser
rejects trailing garbage and unknown fields and reports syntax-error
positions. Numbers are decimal with at most 17 significant digits, which
round-trips IEEE doubles exactly.

Channel document::

    {
      "alphabets": {"S": 6, "X": 2, "Y": 6, "Z": 6},
      "state": [ ... |S| numbers ... ],
      "channel": [[[[ ... ]]]],          # nested [s][x][y][z]
      "factors": {"L": 2, "S_core": 3},  # optional composite-state metadata
      "degraded": true                   # optional
    }

Auxiliary document::

    {
      "alphabets": {"U": 2, "V": 4},
      "kernel": [[ ... ]]                # [s][(u,v,x) flattened row-major]
    }

See docs/formats.md for the full grammar.
"""

from __future__ import annotations

import hashlib
import json

import numpy as np

from .errors import ValidationError
from .prob import Auxiliary, CondKernel, FinitePmf, SdWtc

_CHANNEL_FIELDS = {"alphabets", "state", "channel", "factors", "degraded"}
_AUX_FIELDS = {"alphabets", "kernel"}


def sha256_hex(data: bytes | str) -> str:
    if isinstance(data, str):
        data = data.encode("utf-8")
    return hashlib.sha256(data).hexdigest()


def _load(text: str, what: str) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(
            f"{what}: syntax error at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from None
    if not isinstance(doc, dict):
        raise ValidationError(f"{what}: top-level value must be an object")
    return doc


def _size(alphabets: dict, key: str, what: str) -> int:
    if key not in alphabets:
        raise ValidationError(f"{what}: alphabets is missing {key!r}")
    n = alphabets[key]
    if not isinstance(n, int) or n < 1:
        raise ValidationError(f"{what}: alphabet {key} must be a positive integer")
    return n


def parse_channel_spec(text: str) -> SdWtc:
    doc = _load(text, "channel spec")
    unknown = set(doc) - _CHANNEL_FIELDS
    if unknown:
        raise ValidationError(f"channel spec: unknown fields {sorted(unknown)}")
    for req in ("alphabets", "state", "channel"):
        if req not in doc:
            raise ValidationError(f"channel spec: missing field {req!r}")
    s_n = _size(doc["alphabets"], "S", "channel spec")
    x_n = _size(doc["alphabets"], "X", "channel spec")
    y_n = _size(doc["alphabets"], "Y", "channel spec")
    z_n = _size(doc["alphabets"], "Z", "channel spec")

    state = np.asarray(doc["state"], dtype=np.float64)
    if state.shape != (s_n,):
        raise ValidationError(
            f"channel spec: state vector has shape {state.shape}, expected ({s_n},)"
        )
    try:
        state_law = FinitePmf(state)
    except ValidationError as exc:
        raise ValidationError(f"channel spec: state vector: {exc}") from None

    try:
        trans = np.asarray(doc["channel"], dtype=np.float64)
    except ValueError:
        raise ValidationError("channel spec: channel array is ragged") from None
    if trans.shape != (s_n, x_n, y_n, z_n):
        raise ValidationError(
            f"channel spec: channel array has shape {trans.shape}, "
            f"expected ({s_n},{x_n},{y_n},{z_n})"
        )
    rows = trans.reshape(s_n * x_n, y_n * z_n)
    for i in range(rows.shape[0]):
        total = rows[i].sum()
        if abs(total - 1.0) > 1e-9 or rows[i].min() < -1e-12:
            s, x = divmod(i, x_n)
            raise ValidationError(
                f"channel spec: row (s={s}, x={x}) sums to {total!r}, not 1 within 1e-9"
            )

    state_factors = None
    output_factors = None
    if "factors" in doc:
        fac = doc["factors"]
        if not isinstance(fac, dict) or set(fac) != {"L", "S_core"}:
            raise ValidationError(
                "channel spec: factors must be an object with keys L and S_core"
            )
        card_l = _size(fac, "L", "channel spec")
        core = _size(fac, "S_core", "channel spec")
        if card_l * core != s_n:
            raise ValidationError(
                f"channel spec: factors L*S_core = {card_l * core} != |S| = {s_n}"
            )
        if y_n % card_l != 0:
            raise ValidationError(
                f"channel spec: |Y| = {y_n} not divisible by key factor L = {card_l}"
            )
        state_factors = {"L": card_l, "S_core": core}
        output_factors = {"L": card_l, "Y_core": y_n // card_l}

    degraded = bool(doc.get("degraded", False))
    return SdWtc(
        state_law=state_law,
        kernel=CondKernel((s_n, x_n), y_n * z_n, rows),
        card_Y=y_n,
        card_Z=z_n,
        degraded_by_construction=degraded,
        state_factors=state_factors,
        output_factors=output_factors,
    )


def emit_channel_spec(wtc: SdWtc) -> str:
    doc: dict = {
        "alphabets": {"S": wtc.card_S, "X": wtc.card_X, "Y": wtc.card_Y, "Z": wtc.card_Z},
        "state": wtc.state_law.probs.tolist(),
        "channel": wtc.transition().tolist(),
    }
    if wtc.state_factors is not None:
        doc["factors"] = {
            "L": wtc.state_factors["L"],
            "S_core": wtc.state_factors["S_core"],
        }
    if wtc.degraded_by_construction:
        doc["degraded"] = True
    return json.dumps(doc, indent=1)


def parse_aux_spec(text: str) -> Auxiliary:
    doc = _load(text, "auxiliary spec")
    unknown = set(doc) - _AUX_FIELDS
    if unknown:
        raise ValidationError(f"auxiliary spec: unknown fields {sorted(unknown)}")
    for req in ("alphabets", "kernel"):
        if req not in doc:
            raise ValidationError(f"auxiliary spec: missing field {req!r}")
    u_n = _size(doc["alphabets"], "U", "auxiliary spec")
    v_n = _size(doc["alphabets"], "V", "auxiliary spec")
    try:
        rows = np.asarray(doc["kernel"], dtype=np.float64)
    except ValueError:
        raise ValidationError("auxiliary spec: kernel array is ragged") from None
    if rows.ndim != 2:
        raise ValidationError("auxiliary spec: kernel must be a 2-D array")
    if rows.shape[1] % (u_n * v_n) != 0:
        raise ValidationError(
            f"auxiliary spec: kernel row length {rows.shape[1]} not divisible by "
            f"|U|*|V| = {u_n * v_n}"
        )
    for i in range(rows.shape[0]):
        total = rows[i].sum()
        if abs(total - 1.0) > 1e-9 or rows[i].min() < -1e-12:
            raise ValidationError(
                f"auxiliary spec: row s={i} sums to {total!r}, not 1 within 1e-9"
            )
    return Auxiliary(
        card_U=u_n,
        card_V=v_n,
        kernel=CondKernel((rows.shape[0],), rows.shape[1], rows),
    )


def emit_aux_spec(aux: Auxiliary) -> str:
    doc = {
        "alphabets": {"U": aux.card_U, "V": aux.card_V},
        "kernel": aux.kernel.rows.tolist(),
    }
    return json.dumps(doc, indent=1)
