"""CSV rows for scheme results.

Header (N relays)::

    axis,value,scheme,seed,throughput,energy_efficiency,gamma,t,w,iterations,converged,
    p_1..p_N,rho_1..rho_N,H_1..H_N,error

``t``/``w`` are empty for PS rows, ``rho_n`` empty for TS rows.  ``H_n`` is the
power p_o f_n^H W f_n that relay n receives from the HAP's (energy) beamformer.
Floats use ``repr`` so reruns are byte-identical.
"""

from __future__ import annotations

import csv
import io

import numpy as np

from .baselines import SchemeResult

FIXED_COLUMNS = ["axis", "value", "scheme", "seed", "throughput", "energy_efficiency", "gamma", "t", "w",
                 "iterations", "converged"]


def header(N: int) -> list[str]:
    return (FIXED_COLUMNS + [f"p_{n + 1}" for n in range(N)] + [f"rho_{n + 1}" for n in range(N)]
            + [f"H_{n + 1}" for n in range(N)] + ["error"])


def _f(x) -> str:
    if x is None:
        return ""
    x = float(x)
    return repr(x)


def result_row(res: SchemeResult, axis: str, value, seed: int) -> list[str]:
    N = len(res.p)
    rho = res.rho if res.rho is not None else [None] * N
    return ([axis, _f(value) if value is not None else "", res.scheme, str(seed), _f(res.throughput),
             _f(res.energy_efficiency), _f(res.gamma), _f(res.t), _f(res.w), str(res.iterations),
             "true" if res.converged else "false"]
            + [_f(v) for v in res.p] + [_f(v) for v in rho] + [_f(v) for v in res.received_power] + [""])


def failure_row(N: int, axis: str, value, scheme: str, seed: int, message: str) -> list[str]:
    msg = " ".join(str(message).split())
    return ([axis, _f(value) if value is not None else "", scheme, str(seed), "", "", "", "", "", "0", "false"]
            + [""] * (3 * N) + [msg])


def to_csv(rows: list[list[str]], N: int) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header(N))
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


def read_csv(text: str) -> list[dict]:
    return list(csv.DictReader(io.StringIO(text)))


def column(rows: list[dict], name: str) -> np.ndarray:
    return np.array([float(r[name]) if r[name] != "" else np.nan for r in rows])
