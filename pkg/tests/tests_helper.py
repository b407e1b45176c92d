"""Helper imported both in-process and by the forced-backend subprocess."""

import numpy as np

from sdwtc.prob import Auxiliary, CondKernel, FinitePmf, SdWtc
from sdwtc.sim import SimConfig, run_trials


def report_fingerprint() -> str:
    rows = np.zeros((4, 4))
    for s in range(2):
        for x in range(2):
            rows[s * 2 + x, x * 2 + x] += 0.75
            rows[s * 2 + x, x * 2 + (1 - x)] += 0.25
    wtc = SdWtc(FinitePmf([0.5, 0.5]), CondKernel((2, 2), 4, rows), card_Y=2, card_Z=2)
    table = np.zeros((2, 1, 2, 2))
    for s in range(2):
        for v in range(2):
            table[s, 0, v, v] = 0.8 if v == s else 0.2
    aux = Auxiliary(1, 2, CondKernel((2,), 4, table.reshape(2, 4)))
    cfg = SimConfig(n=6, rate_m=0.2, rate_k=0.2, rate_1=0.0, rate_2=0.2,
                    eps_typ=0.5, trials=300, seed=13)
    rep = run_trials(wtc, aux, cfg)
    return f"{rep.avg_error:.12f}|{rep.max_error:.12f}|{rep.key_tv:.12f}"
