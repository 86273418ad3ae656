"""Distributionally robust interference chance constraints.

For a CUE with relay-to-CUE channel ``z`` whose first and second moments are
known through ``Sigma = [[S + u u^H, u], [u^H, 1]]``, the worst-case
probability that the aggregate interference ``sum_n p_n |z_n|^2`` reaches
``phi_bar`` is the value of a small SDP over the moment matrix.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .conic import ProgramBuilder, dump_program, solve
from .matrix import is_psd

log = logging.getLogger(__name__)


class ChanceSolverError(RuntimeError):
    def __init__(self, message: str, dump: str):
        super().__init__(message)
        self.dump = dump


@dataclass(frozen=True)
class MomentAmbiguitySet:
    Sigma: np.ndarray
    phi_bar: float
    zeta: float = 1.0

    def __post_init__(self):
        s = np.asarray(self.Sigma)
        if s.ndim != 2 or s.shape[0] != s.shape[1] or s.shape[0] < 2:
            raise ValueError("Sigma must be square of size N+1 >= 2")
        if abs(s[-1, -1] - 1.0) > 1e-12:
            raise ValueError("Sigma bottom-right entry must be 1")
        if not is_psd(s):
            raise ValueError("Sigma must be psd")
        if not self.phi_bar > 0:
            raise ValueError("phi_bar must be > 0")
        if not (0 < self.zeta <= 1):
            raise ValueError("zeta out of range (0, 1]")

    @property
    def N(self) -> int:
        return self.Sigma.shape[0] - 1

    @property
    def is_complex(self) -> bool:
        return bool(np.any(np.imag(self.Sigma) != 0))


def _moment_kind(amb: MomentAmbiguitySet) -> str:
    return "hpsd" if amb.is_complex else "psd"


def _selector(dim: int, dtype=float) -> np.ndarray:
    """Tensor T with T[a, b, i, j] = delta_ai delta_bj (identity LMI term)."""
    t = np.zeros((dim, dim, dim, dim), dtype=dtype)
    for a in range(dim):
        for b in range(dim):
            t[a, b, a, b] = 1.0
    return t


def worst_case_violation(c, amb: MomentAmbiguitySet, tol: float = 1e-9) -> float:
    """Worst-case P(sum c_n^2 |z_n|^2 >= phi_bar) over the moment set, in [0, 1]."""
    c = np.asarray(c, dtype=float)
    if c.shape != (amb.N,):
        raise ValueError(f"c must have length {amb.N}")
    if np.any(c < 0):
        raise ValueError("c must be elementwise nonnegative")
    if not np.any(c > 0):
        return 0.0
    n1 = amb.N + 1
    kind = _moment_kind(amb)
    b = ProgramBuilder()
    b.add_block("M", kind, n1)
    b.add_block("nu", "nonneg", 1)
    # maximize -Tr(Sigma M)
    b.set_objective({"M": -np.asarray(amb.Sigma)})
    const = np.zeros((n1, n1))
    const[-1, -1] = -1.0
    t_nu = np.zeros((n1, n1, 1))
    t_nu[: amb.N, : amb.N, 0] = -np.diag(c * c)
    t_nu[-1, -1, 0] = amb.phi_bar
    dtype = complex if kind == "hpsd" else float
    b.add_lmi(const, {"M": _selector(n1, dtype), "nu": t_nu}, label="moment")
    prog = b.build()
    sol = solve(prog, tol=tol)
    # a numerical stall after reaching the target accuracy is still an answer
    if sol.status != "optimal" and not (sol.status == "max_iter" and sol.kkt.max() <= 1e-7):
        raise ChanceSolverError(f"worst-case violation SDP ended with status {sol.status}", dump_program(prog))
    return float(np.clip(-sol.objective, 0.0, 1.0))


def markov_bound(p, S, phi_bar) -> float:
    """min(1, E[sum p_n |z_n|^2] / phi_bar) for zero-mean z with covariance S."""
    return float(min(1.0, np.real(np.sum(np.asarray(p) * np.diag(S))) / phi_bar))


def add_chance_fragment(builder: ProgramBuilder, prefix: str, diag_terms: dict, amb: MomentAmbiguitySet) -> tuple[str, str] | None:
    """Append the homogenized chance-constraint fragment for one CUE.

    ``diag_terms`` maps a block name to a tensor ``T`` of shape
    ``(N, *block_shape)`` such that the n-th interference weight is
    ``sum T[n] * X`` (e.g. diagonal selectors of ``C`` or the power vector).
    Adds the moment block ``M`` (N+1 square) and ``nu >= 0``, the LMI
    ``M >= [[D, 0], [0, nu - phi_bar]]`` and ``Tr(Sigma M) <= zeta nu``.

    With ``zeta = 1`` the probability bound is vacuous and nothing is added
    (returns None): the homogenized form cannot express the trivial
    certificate and would wrongly demand ``E[interference] <= phi_bar``.
    """
    if amb.zeta >= 1.0:
        return None
    n, n1 = amb.N, amb.N + 1
    kind = _moment_kind(amb)
    m_name, nu_name = f"{prefix}M", f"{prefix}nu"
    builder.add_block(m_name, kind, n1)
    builder.add_block(nu_name, "nonneg", 1)
    const = np.zeros((n1, n1))
    const[-1, -1] = amb.phi_bar
    t_nu = np.zeros((n1, n1, 1))
    t_nu[-1, -1, 0] = -1.0
    dtype = complex if kind == "hpsd" else float
    terms = {m_name: _selector(n1, dtype), nu_name: t_nu}
    for name, t in diag_terms.items():
        t = np.asarray(t)
        lmi_t = np.zeros((n1, n1) + t.shape[1:], dtype=t.dtype)
        for i in range(n):
            lmi_t[i, i] = -t[i]
        terms[name] = lmi_t
    builder.add_lmi(const, terms, label=f"{prefix}chance-lmi")
    builder.add_constraint({m_name: np.asarray(amb.Sigma), nu_name: np.array([-amb.zeta])}, "le", 0.0,
                           label=f"{prefix}chance-trace")
    return m_name, nu_name


def chance_lmi_blocks(powers_dim: int, amb: MomentAmbiguitySet):
    """Stand-alone fragment over a nonneg power vector ``p`` (block name ``p``).

    Returns the builder so callers can add an objective and further rows.
    """
    b = ProgramBuilder()
    b.add_block("p", "nonneg", powers_dim)
    add_chance_fragment(b, "cue0_", {"p": np.eye(powers_dim)}, amb)
    return b


def fragment_feasible(p, amb: MomentAmbiguitySet, tol: float = 1e-9) -> bool:
    """Is the homogenized fragment feasible with the power vector fixed to ``p``?"""
    p = np.asarray(p, dtype=float)
    if amb.zeta >= 1.0:
        return True
    b = chance_lmi_blocks(amb.N, amb)
    b.set_objective({"p": np.zeros(amb.N)})
    for i in range(amb.N):
        e = np.zeros(amb.N)
        e[i] = 1.0
        b.add_constraint({"p": e}, "eq", float(p[i]))
    sol = solve(b.build(), tol=tol)
    return sol.status == "optimal"


def max_feasible_scale(p, amb: MomentAmbiguitySet, tol: float = 1e-9) -> float:
    """Largest s with s * p satisfying the chance constraint (inf if unbounded).

    Interference is linear in the power vector, so the worst-case probability of
    ``s p`` against ``phi_bar`` equals that of ``p`` against ``phi_bar / s``; the
    threshold ``phi'`` is minimized by an SDP linear in ``(M, nu, phi')``.
    """
    p = np.asarray(p, dtype=float)
    if amb.zeta >= 1.0 or not np.any(p > 0):
        return np.inf
    n, n1 = amb.N, amb.N + 1
    kind = _moment_kind(amb)
    b = ProgramBuilder()
    b.add_block("M", kind, n1)
    b.add_block("nu", "nonneg", 1)
    b.add_block("phi", "nonneg", 1)
    b.set_objective({"phi": np.array([-1.0])})
    const = np.zeros((n1, n1))
    const[: n, : n] = -np.diag(p)
    t_nu = np.zeros((n1, n1, 1))
    t_nu[-1, -1, 0] = -1.0
    t_phi = np.zeros((n1, n1, 1))
    t_phi[-1, -1, 0] = 1.0
    dtype = complex if kind == "hpsd" else float
    b.add_lmi(const, {"M": _selector(n1, dtype), "nu": t_nu, "phi": t_phi})
    b.add_constraint({"M": np.asarray(amb.Sigma), "nu": np.array([-amb.zeta])}, "le", 0.0)
    prog = b.build()
    sol = solve(prog, tol=tol)
    if sol.status != "optimal":
        raise ChanceSolverError(f"scale SDP ended with status {sol.status}", dump_program(prog))
    phi_min = float(sol.values["phi"][0])
    return amb.phi_bar / phi_min if phi_min > 0 else np.inf


# ----------------------------------------------------------------- sampling

Sampler = Callable[[np.random.Generator, int], np.ndarray]


def _sqrt_psd(S: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(0.5 * (S + S.conj().T))
    return v * np.sqrt(np.clip(w, 0.0, None))[None, :]


def gaussian_sampler(u: np.ndarray, S: np.ndarray) -> Sampler:
    """Circularly-symmetric complex Gaussian CN(u, S)."""
    u = np.asarray(u, dtype=complex)
    L = _sqrt_psd(np.asarray(S))

    def draw(rng, n):
        w = (rng.standard_normal((n, u.size)) + 1j * rng.standard_normal((n, u.size))) / np.sqrt(2.0)
        return u[None, :] + w @ L.T

    return draw


def scale_mixture_sampler(u: np.ndarray, S: np.ndarray, shape: float = 0.5) -> Sampler:
    """Heavy-tailed z = u + sqrt(s) w with s ~ Gamma(shape, 1/shape) (E s = 1).

    Has the same mean and covariance as CN(u, S) but much heavier tails for
    small ``shape``.
    """
    base = gaussian_sampler(np.zeros_like(np.asarray(u, dtype=complex)), S)
    u = np.asarray(u, dtype=complex)

    def draw(rng, n):
        s = rng.gamma(shape, 1.0 / shape, size=n)
        return u[None, :] + np.sqrt(s)[:, None] * base(rng, n)

    return draw


def two_point_sampler(u: np.ndarray, S: np.ndarray, q: float) -> Sampler:
    """z = u + sqrt(s) w with s in {0, 1/q} (P(s = 1/q) = q); same two moments."""
    base = gaussian_sampler(np.zeros_like(np.asarray(u, dtype=complex)), S)
    u = np.asarray(u, dtype=complex)

    def draw(rng, n):
        s = np.where(rng.random(n) < q, 1.0 / q, 0.0)
        return u[None, :] + np.sqrt(s)[:, None] * base(rng, n)

    return draw


@dataclass(frozen=True)
class EmpiricalEstimate:
    probability: float
    stderr: float
    trials: int


def empirical_violation(p, sampler: Sampler, phi_bar: float, trials: int, rng: np.random.Generator,
                        batch: int = 100_000) -> EmpiricalEstimate:
    """Monte-Carlo fraction of draws with sum_n p_n |z_n|^2 >= phi_bar."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    p = np.asarray(p, dtype=float)
    hits = 0
    done = 0
    while done < trials:
        k = min(batch, trials - done)
        z = sampler(rng, k)
        hits += int(np.count_nonzero((np.abs(z) ** 2) @ p >= phi_bar))
        done += k
    prob = hits / trials
    return EmpiricalEstimate(prob, float(np.sqrt(max(prob * (1 - prob), 0.0) / trials)), trials)


def ambiguity_sets(realization, scenario) -> list[MomentAmbiguitySet]:
    return [MomentAmbiguitySet(realization.Sigma[m], scenario.phi_bar, scenario.zeta) for m in range(realization.M)]


def chance_satisfied(p, realization, scenario, slack: float = 1e-4) -> bool:
    """Post-hoc check: worst-case violation <= zeta + slack for every CUE."""
    c = np.sqrt(np.clip(np.asarray(p, dtype=float), 0.0, None))
    for amb in ambiguity_sets(realization, scenario):
        if worst_case_violation(c, amb) > amb.zeta + slack:
            return False
    return True
