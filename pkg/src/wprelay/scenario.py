"""Network scenario, path loss, channel sampling and the logistic EH model.

All powers used inside the optimizers are dimensionless: transmit powers are
divided by the receiver noise power, and channel gains are linear path-loss
attenuations (unit-variance noise at every receiver).
"""

from __future__ import annotations

import dataclasses
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

import numpy as np
from scipy.special import expit

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib


class ScenarioError(ValueError):
    """Invalid scenario value or malformed scenario file."""


EH_MODELS = ("linear", "nonlinear")
W1_STRATEGIES = ("mrt_strongest", "uniform", "alt_sdr")


@dataclass(frozen=True)
class NetworkScenario:
    K: int = 3
    N: int = 3
    M: int = 1
    d_f: tuple = (2.0, 3.0, 4.0)
    d_g: tuple = (2.0, 2.0, 2.0)
    # d_z[m][n]: relay n to CUE m
    d_z: tuple = ((3.0, 3.0, 3.0),)
    alpha: float = 2.0
    L0_db: float = 25.0
    noise_density_dbm_hz: float = -90.0
    bandwidth_hz: float = 100e3
    eta: float = 0.5
    p_o_mw: float = 50.0
    zeta: float = 0.3
    phi_bar: float = 1.0
    u_scale: float = 1.0
    eh_model: str = "linear"
    # per-relay logistic parameters; None selects the synthetic defaults
    eh_nu: tuple | None = None
    eh_a: tuple | None = None
    eh_b: tuple | None = None
    epsilon: float = 1e-5
    seed: int = 42
    # algorithm knobs
    max_iter: int = 500
    w1_strategy: str = "alt_sdr"
    w1_rounds: int = 3
    ps_half_slot: bool = True
    solver_tol: float = 1e-7

    def __post_init__(self):
        conv = {
            "d_f": tuple(float(v) for v in self.d_f),
            "d_g": tuple(float(v) for v in self.d_g),
            "d_z": _as_matrix(self.d_z, self.M, self.N),
        }
        for k in ("eh_nu", "eh_a", "eh_b"):
            v = getattr(self, k)
            if v is not None:
                conv[k] = tuple(float(x) for x in np.atleast_1d(v))
        for k, v in conv.items():
            object.__setattr__(self, k, v)
        self.validate()

    def validate(self) -> None:
        for k in ("K", "N", "M"):
            v = getattr(self, k)
            if not isinstance(v, (int, np.integer)) or v < 1:
                raise ScenarioError(f"{k} out of range: must be a positive integer, got {v!r}")
        if len(self.d_f) != self.N or len(self.d_g) != self.N:
            raise ScenarioError("d_f and d_g need one distance per relay")
        dists = list(self.d_f) + list(self.d_g) + [x for row in self.d_z for x in row]
        if any(not (d > 0 and math.isfinite(d)) for d in dists):
            raise ScenarioError("distances out of range: all must be > 0")
        if not (0 < self.eta <= 1):
            raise ScenarioError(f"eta out of range (0, 1]: {self.eta}")
        if not (0 < self.zeta <= 1):
            raise ScenarioError(f"zeta out of range (0, 1]: {self.zeta}")
        if not (self.p_o_mw > 0 and math.isfinite(self.p_o_mw)):
            raise ScenarioError(f"p_o_mw out of range: {self.p_o_mw}")
        if not self.epsilon > 0:
            raise ScenarioError(f"epsilon out of range: {self.epsilon}")
        if not self.phi_bar > 0:
            raise ScenarioError(f"phi_bar out of range: {self.phi_bar}")
        if not self.u_scale >= 0:
            raise ScenarioError(f"u_scale out of range: {self.u_scale}")
        if not self.bandwidth_hz > 0:
            raise ScenarioError(f"bandwidth_hz out of range: {self.bandwidth_hz}")
        if self.alpha <= 0:
            raise ScenarioError(f"alpha out of range: {self.alpha}")
        if self.eh_model not in EH_MODELS:
            raise ScenarioError(f"eh_model must be one of {EH_MODELS}, got {self.eh_model!r}")
        if self.w1_strategy not in W1_STRATEGIES:
            raise ScenarioError(f"w1_strategy must be one of {W1_STRATEGIES}, got {self.w1_strategy!r}")
        for k in ("eh_nu", "eh_a", "eh_b"):
            v = getattr(self, k)
            if v is not None and (len(v) != self.N or any(x <= 0 for x in v)):
                raise ScenarioError(f"{k} out of range: need {self.N} positive values")
        if self.max_iter < 1 or self.w1_rounds < 1:
            raise ScenarioError("max_iter and w1_rounds must be positive")

    # ---------------------------------------------------------------- units

    @property
    def noise_power_w(self) -> float:
        return 10.0 ** ((self.noise_density_dbm_hz - 30.0) / 10.0) * self.bandwidth_hz

    def mw_to_normalized(self, p_mw: float) -> float:
        return p_mw * 1e-3 / self.noise_power_w

    def normalized_to_mw(self, p: float) -> float:
        return p * self.noise_power_w * 1e3

    @property
    def p_o(self) -> float:
        """HAP transmit power normalized by the noise power."""
        return self.mw_to_normalized(self.p_o_mw)

    def replace(self, **changes) -> "NetworkScenario":
        return dataclasses.replace(self, **changes)

    def eh(self) -> "NonlinearEhModel":
        return NonlinearEhModel.for_scenario(self)


def _as_matrix(v, M, N) -> tuple:
    arr = np.asarray(v, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.shape != (M, N):
        raise ScenarioError(f"d_z must have shape ({M}, {N}), got {arr.shape}")
    return tuple(tuple(float(x) for x in row) for row in arr)


def path_loss_db(d: float, scenario: NetworkScenario) -> float:
    """Log-distance path loss L0 + 10 alpha log10(d / 1 m)."""
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise ScenarioError("distance must be > 0")
    out = scenario.L0_db + 10.0 * scenario.alpha * np.log10(d)
    return float(out) if out.ndim == 0 else out


def gain(d, scenario: NetworkScenario):
    return 10.0 ** (-np.asarray(path_loss_db(d, scenario)) / 10.0)


# ------------------------------------------------------------------ channels


@dataclass(frozen=True)
class ChannelRealization:
    F: np.ndarray  # (K, N), column n is f_n
    g: np.ndarray  # (N,)
    u: np.ndarray  # (M, N) mean of z_m
    S: np.ndarray  # (M, N, N) covariance of z_m
    Sigma: np.ndarray  # (M, N+1, N+1)

    @property
    def K(self) -> int:
        return self.F.shape[0]

    @property
    def N(self) -> int:
        return self.F.shape[1]

    @property
    def M(self) -> int:
        return self.S.shape[0]

    def subset(self, idx) -> "ChannelRealization":
        """Realization restricted to the relays in ``idx``."""
        idx = np.atleast_1d(idx)
        u = self.u[:, idx]
        S = self.S[:, idx][:, :, idx]
        return ChannelRealization(self.F[:, idx], self.g[idx], u, S, assemble_sigma(u, S))


def assemble_sigma(u: np.ndarray, S: np.ndarray) -> np.ndarray:
    """Second-moment matrices [[S + u u^H, u], [u^H, 1]] for every CUE."""
    M, N = u.shape
    out = np.zeros((M, N + 1, N + 1), dtype=np.result_type(u, S, float))
    for m in range(M):
        out[m, :N, :N] = S[m] + np.outer(u[m], u[m].conj())
        out[m, :N, N] = u[m]
        out[m, N, :N] = u[m].conj()
        out[m, N, N] = 1.0
    return out


def _cn(rng: np.random.Generator, var, size) -> np.ndarray:
    return np.sqrt(np.asarray(var) / 2.0) * (rng.standard_normal(size) + 1j * rng.standard_normal(size))


def draw_channels(scenario: NetworkScenario, rng: np.random.Generator) -> ChannelRealization:
    """Rayleigh fading on top of log-distance path loss; z_m moments are analytic."""
    K, N, M = scenario.K, scenario.N, scenario.M
    var_f = gain(np.array(scenario.d_f), scenario)
    var_g = gain(np.array(scenario.d_g), scenario)
    F = _cn(rng, var_f[None, :], (K, N))
    g = _cn(rng, var_g, (N,))
    var_z = gain(np.array(scenario.d_z), scenario).reshape(M, N)
    u = np.zeros((M, N))
    S = np.array([np.diag(v) for v in var_z]) * scenario.u_scale
    return ChannelRealization(F, g, u, S, assemble_sigma(u, S))


# ----------------------------------------------------------------------- EH


@dataclass(frozen=True)
class NonlinearEhModel:
    nu: np.ndarray
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        if np.any(self.nu <= 0) or np.any(self.a <= 0):
            raise ScenarioError("nonlinear EH needs nu > 0 and a > 0")

    @property
    def Omega(self) -> np.ndarray:
        return 1.0 / (1.0 + np.exp(self.a * self.b))

    @classmethod
    def for_scenario(cls, sc: NetworkScenario) -> "NonlinearEhModel":
        # synthetic defaults: saturate at the linear harvest for 50 mW with
        # the expected beamforming gain K * path-loss gain
        p50 = sc.mw_to_normalized(50.0) * sc.K * gain(np.array(sc.d_f), sc)
        nu = np.array(sc.eh_nu) if sc.eh_nu is not None else sc.eta * p50
        b = np.array(sc.eh_b) if sc.eh_b is not None else p50 / 2.0
        a = np.array(sc.eh_a) if sc.eh_a is not None else np.full(sc.N, 0.1)
        return cls(np.asarray(nu, float), np.asarray(a, float), np.asarray(b, float))

    def subset(self, idx) -> "NonlinearEhModel":
        idx = np.atleast_1d(idx)
        return NonlinearEhModel(self.nu[idx], self.a[idx], self.b[idx])

    def harvest(self, receive_power, n: int):
        p = np.asarray(receive_power, dtype=float)
        if np.any(p < 0):
            raise ScenarioError("receive power must be nonnegative")
        nu, a, b, om = self.nu[n], self.a[n], self.b[n], self.Omega[n]
        ell = nu * expit(a * (p - b))
        out = (ell - nu * om) / (1.0 - om)
        return float(out) if out.ndim == 0 else out


def nonlinear_eh(receive_power, model: NonlinearEhModel, n: int):
    return model.harvest(receive_power, n)


# --------------------------------------------------------------------- file

_FIELDS = {f.name: f for f in dataclasses.fields(NetworkScenario)}


def scenario_from_dict(d: Mapping[str, Any], base: NetworkScenario | None = None) -> NetworkScenario:
    unknown = sorted(set(d) - set(_FIELDS))
    if unknown:
        raise ScenarioError(f"unknown scenario key(s): {', '.join(unknown)}")
    base = base or NetworkScenario()
    kw = dict(d)
    if "N" in kw and kw["N"] != base.N:
        # distance defaults do not carry over to a different relay count
        for k in ("d_f", "d_g", "d_z"):
            if k not in kw:
                raise ScenarioError(f"{k} must be given when N differs from the default")
    if "M" in kw and "d_z" not in kw:
        raise ScenarioError("d_z must be given when M is set")
    try:
        return dataclasses.replace(base, **kw)
    except TypeError as exc:
        raise ScenarioError(str(exc)) from exc


def parse_scenario(text: str, base: NetworkScenario | None = None) -> NetworkScenario:
    """Parse TOML scenario text; decode errors carry line and column."""
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError(f"scenario parse error: {exc}") from exc
    return scenario_from_dict(data, base)


def load_scenario(path: str | Path) -> NetworkScenario:
    return parse_scenario(Path(path).read_text())


def scenario_to_toml(sc: NetworkScenario) -> str:
    lines = []
    for name in _FIELDS:
        v = getattr(sc, name)
        if v is None:
            continue
        lines.append(f"{name} = {_toml_value(v)}")
    return "\n".join(lines) + "\n"


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return '"' + v + '"'
    if isinstance(v, (tuple, list)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    return repr(v)
