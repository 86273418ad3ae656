"""Best-relay-selection baselines, a uniform result record and energy efficiency."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .ps import PsSolution, optimize_ps, received_power
from .scenario import ChannelRealization, NetworkScenario
from .ts import TsSolution, optimize_ts

SCHEMES = ("OPT-TS", "OPT-PS", "BRS-TS", "BRS-PS")


def energy_efficiency(throughput: float, total_relay_power: float) -> float:
    """Throughput per unit (normalized) relay transmit power."""
    return float(throughput) / max(float(total_relay_power), 1e-12)


@dataclass
class SchemeResult:
    scheme: str
    throughput: float
    gamma: float
    p: np.ndarray  # per-relay transmit power (normalized), zeros for silent relays
    received_power: np.ndarray  # p_o f_n^H W f_n of the HAP's (energy) beamformer
    iterations: int
    converged: bool
    t: float | None = None  # TS: information sub-slot length
    rho: np.ndarray | None = None  # PS: splitting ratios
    selected: int | None = None  # BRS: chosen relay
    detail: object = field(default=None, repr=False)

    @property
    def total_relay_power(self) -> float:
        return float(np.sum(self.p))

    @property
    def energy_efficiency(self) -> float:
        return energy_efficiency(self.throughput, self.total_relay_power)

    @property
    def w(self) -> float | None:
        return None if self.t is None else 1.0 - 2.0 * self.t


def from_ts(sol: TsSolution, scheme: str = "OPT-TS") -> SchemeResult:
    return SchemeResult(scheme, sol.throughput, sol.gamma, np.asarray(sol.p, float), np.asarray(sol.received_power),
                        sol.iterations, sol.converged, t=sol.t, detail=sol)


def from_ps(sol: PsSolution, scheme: str = "OPT-PS") -> SchemeResult:
    return SchemeResult(scheme, sol.throughput, sol.gamma, np.asarray(sol.p, float), np.asarray(sol.received_power),
                        sol.iterations, sol.converged, rho=np.asarray(sol.rho, float), detail=sol)


def brs_select(realization: ChannelRealization) -> int:
    """Relay with the largest two-hop gain ||f_n||^2 |g_n|^2 (lowest index on ties)."""
    metric = np.sum(np.abs(realization.F) ** 2, axis=0) * np.abs(realization.g) ** 2
    return int(np.argmax(metric))


def single_relay_scenario(scenario: NetworkScenario, n: int) -> NetworkScenario:
    """The scenario restricted to relay ``n``."""
    changes = dict(N=1, d_f=(scenario.d_f[n],), d_g=(scenario.d_g[n],),
                   d_z=tuple((row[n],) for row in scenario.d_z))
    for k in ("eh_nu", "eh_a", "eh_b"):
        v = getattr(scenario, k)
        if v is not None:
            changes[k] = (v[n],)
    if scenario.eh_model == "nonlinear" and scenario.eh_nu is None:
        # freeze the synthetic defaults of the full scenario for this relay
        model = scenario.eh()
        changes.update(eh_nu=(float(model.nu[n]),), eh_a=(float(model.a[n]),), eh_b=(float(model.b[n]),))
    return scenario.replace(**changes)


def optimize_brs(scenario: NetworkScenario, realization: ChannelRealization, scheme: str) -> SchemeResult:
    """Single-relay optimization on the best relay; the others stay silent."""
    if scheme not in ("ts", "ps"):
        raise ValueError("scheme must be 'ts' or 'ps'")
    n = brs_select(realization)
    sub_sc = single_relay_scenario(scenario, n)
    sub = realization.subset([n])
    N = realization.N
    p = np.zeros(N)
    if scheme == "ts":
        sol = optimize_ts(sub_sc, sub)
        p[n] = sol.p[0]
        recv = received_power(realization, sol.W_e, scenario.p_o)
        return SchemeResult("BRS-TS", sol.throughput, sol.gamma, p, recv, sol.iterations, sol.converged,
                            t=sol.t, selected=n, detail=sol)
    sol = optimize_ps(sub_sc, sub)
    p[n] = sol.p[0]
    rho = np.zeros(N)
    rho[n] = sol.rho[0]
    recv = received_power(realization, sol.W_p, scenario.p_o)
    return SchemeResult("BRS-PS", sol.throughput, sol.gamma, p, recv, sol.iterations, sol.converged,
                        rho=rho, selected=n, detail=sol)


def run_scheme(scheme: str, scenario: NetworkScenario, realization: ChannelRealization) -> SchemeResult:
    if scheme == "OPT-TS":
        return from_ts(optimize_ts(scenario, realization))
    if scheme == "OPT-PS":
        return from_ps(optimize_ps(scenario, realization))
    if scheme == "BRS-TS":
        return optimize_brs(scenario, realization, "ts")
    if scheme == "BRS-PS":
        return optimize_brs(scenario, realization, "ps")
    raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
