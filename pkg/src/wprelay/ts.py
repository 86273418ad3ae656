"""Time-switching scheme: SDR projection oracle and the alternating driver.

With information beamformer ``W1`` fixed, the end-to-end SNR of relay powers
``p = c**2`` is ``c'Ac / (1 + c'Bc)`` where ``A = a a'`` with
``a_n = sqrt(p_o H_nn) |g_n|`` (coherent relay phases) and
``B = diag(|g_n|^2 / (1 + p_o |h_n|^2))``.  The pair ``(t, gamma)`` lives in a
normal set that the polyblock engine explores through :func:`ts_projection_feasibility`.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .chance import add_chance_fragment, ambiguity_sets, max_feasible_scale, worst_case_violation
from .conic import ProgramBuilder, solve
from .matrix import eig_hermitian, hermitize
from .polyblock import MonotonicTrace, OracleAnswer, run_monotonic
from .scenario import ChannelRealization, NetworkScenario, NonlinearEhModel

log = logging.getLogger(__name__)

RANK_ONE_RATIO = 1e-6
FEAS_MARGIN = 1e-8


@dataclass(frozen=True)
class TsProblemData:
    A: np.ndarray
    Bmat: np.ndarray
    H: np.ndarray
    h: np.ndarray  # |h_n|^2 = f_n^H W1 f_n
    a: np.ndarray
    W1: np.ndarray
    p_o: float
    realization: ChannelRealization
    scenario: NetworkScenario | None

    @property
    def N(self) -> int:
        return self.A.shape[0]

    def gamma_of(self, c: np.ndarray) -> float:
        c = np.asarray(c, dtype=float)
        return float((self.a @ c) ** 2 / (1.0 + c @ self.Bmat @ c))

    @property
    def gamma_max(self) -> float:
        """Upper bound a' B^{-1} a on the SNR (relays with g_n = 0 contribute nothing)."""
        b = np.diag(self.Bmat)
        mask = b > 0
        return float(np.sum(self.a[mask] ** 2 / b[mask]))

    def gamma_cap(self) -> float:
        """Upper bound on the SNR over the feasible set.

        Besides ``gamma_max``, any CUE with ``zeta < 1`` gives one: the
        worst-case violation is at least the Markov ratio, so feasible powers
        satisfy ``sum_n p_n E|z_mn|^2 <= zeta phi_bar`` and Cauchy-Schwarz bounds
        ``(a'c)^2`` by ``zeta phi_bar sum_n a_n^2 / E|z_mn|^2``.
        """
        cap = self.gamma_max
        sc = self.scenario
        if sc is None or sc.zeta >= 1:
            return cap
        for Sig in self.realization.Sigma:
            e2 = np.real(np.diag(Sig))[:-1]
            if np.any((e2 <= 0) & (self.a > 0)):
                continue
            mask = self.a > 0
            cap = min(cap, float(sc.zeta * sc.phi_bar * np.sum(self.a[mask] ** 2 / e2[mask])))
        return cap


def build_ts_matrices(realization: ChannelRealization, W1: np.ndarray, p_o: float,
                      scenario: NetworkScenario | None = None) -> TsProblemData:
    W1 = np.asarray(W1)
    K = realization.K
    if W1.shape != (K, K):
        raise ValueError(f"W1 must be {K}x{K}")
    F = realization.F
    h2 = np.real(np.einsum("kn,kl,ln->n", F.conj(), W1, F))
    h2 = np.clip(h2, 0.0, None)
    g2 = np.abs(realization.g) ** 2
    denom = 1.0 + p_o * h2
    Hd = h2 / denom
    Bd = g2 / denom
    a = np.sqrt(p_o * Hd) * np.abs(realization.g)
    return TsProblemData(np.outer(a, a), np.diag(Bd), np.diag(Hd), h2, a, W1, p_o, realization, scenario)


# ----------------------------------------------------------- nonlinear budget


def eh_minorant(model: NonlinearEhModel, n: int, p_max: float, pieces: int = 12) -> list[tuple[float, float]]:
    """Concave piecewise-linear lower bound on the logistic harvest curve.

    Returns lines ``(slope, intercept)``; ``min_j slope_j P + intercept_j`` is
    below ``E_n(P)`` for every ``P >= 0``.  The first line joins the origin to
    the tangency point of the concave branch, the middle ones are chords of
    the concave branch up to ``p_max`` and the last one is flat.
    """
    E = lambda P: model.harvest(P, n)
    a, b, nu, om = model.a[n], model.b[n], model.nu[n], model.Omega[n]

    def dE(P):
        s = 1.0 / (1.0 + math.exp(-a * (P - b)))
        return nu * a * s * (1 - s) / (1.0 - om)

    p_max = max(float(p_max), 1e-12)
    lo = max(b, 0.0)
    hi = max(lo + 50.0 / a, 2 * lo + 1.0)
    f = lambda P: dE(P) * P - E(P)
    if lo == 0.0 or f(lo) <= 0:
        p_t = lo if lo > 0 else 1e-12
    else:
        p_t = brentq(f, lo, hi, xtol=1e-12 * hi)
    if p_max <= p_t:
        return [(E(p_max) / p_max, 0.0), (0.0, E(p_max))]
    lines = [(E(p_t) / p_t, 0.0)]
    xs = np.linspace(p_t, p_max, pieces + 1)
    for x0, x1 in zip(xs[:-1], xs[1:]):
        s = (E(x1) - E(x0)) / (x1 - x0)
        lines.append((s, E(x0) - s * x0))
    lines.append((0.0, E(p_max)))
    return lines


# -------------------------------------------------------------------- oracle


@dataclass
class TsWitness:
    c: np.ndarray
    C: np.ndarray
    W_e: np.ndarray
    q: float
    gamma: float
    lam: float
    z: tuple


def _ts_program(data: TsProblemData, lam: float, z_k, eh_lines=None):
    t_k, g_k = z_k
    sc = data.scenario
    if sc is None:
        raise ValueError("TS oracle needs the scenario attached to the problem data")
    N, K = data.N, data.realization.K
    F = data.realization.F
    lt = lam * t_k
    b = ProgramBuilder()
    b.add_block("C", "psd", N)
    b.add_block("We", "hpsd", K)
    b.set_objective({"C": data.A - lam * g_k * data.Bmat})
    for n in range(N):
        sel = np.zeros((N, N))
        sel[n, n] = lt
        ff = np.outer(F[:, n], F[:, n].conj())
        if eh_lines is None:
            b.add_constraint({"C": sel, "We": -(1 - 2 * lt) * sc.eta * data.p_o * ff}, "le", 0.0, f"budget{n}")
        else:
            for j, (slope, icpt) in enumerate(eh_lines[n]):
                b.add_constraint({"C": sel, "We": -(1 - 2 * lt) * slope * data.p_o * ff}, "le",
                                 (1 - 2 * lt) * icpt, f"budget{n}.{j}")
    b.add_constraint({"We": np.eye(K)}, "le", 1.0, "trace")
    diag_sel = np.zeros((N, N, N))
    for n in range(N):
        diag_sel[n, n, n] = 1.0
    for m, amb in enumerate(ambiguity_sets(data.realization, sc)):
        add_chance_fragment(b, f"cue{m}_", {"C": diag_sel}, amb)
    return b.build()


def _eh_lines(data: TsProblemData):
    sc = data.scenario
    if sc.eh_model != "nonlinear":
        return None
    model = sc.eh()
    F = data.realization.F
    p_max = data.p_o * np.sum(np.abs(F) ** 2, axis=0)
    return [eh_minorant(model, n, p_max[n]) for n in range(data.N)]


def ts_projection_feasibility(data: TsProblemData, lam: float, z_k, eh_lines=None, tol: float | None = None):
    """Evaluate the SDR of the projection problem at ``lam * z_k``.

    Returns an :class:`OracleAnswer` whose margin is ``q - lam * gamma_k`` and
    whose witness is a :class:`TsWitness`.
    """
    t_k, g_k = float(z_k[0]), float(z_k[1])
    N, K = data.N, data.realization.K
    if lam <= 0:
        return OracleAnswer(True, TsWitness(np.zeros(N), np.zeros((N, N)), np.eye(K) / K, 0.0, 0.0, lam, (t_k, g_k)), None)
    if lam * t_k >= 0.5:
        return OracleAnswer(False, None, None)
    if g_k <= 0:
        return OracleAnswer(True, TsWitness(np.zeros(N), np.zeros((N, N)), np.eye(K) / K, 0.0, 0.0, lam, (t_k, g_k)), None)
    prog = _ts_program(data, lam, (t_k, g_k), eh_lines)
    sol = solve(prog, tol=tol or data.scenario.solver_tol)
    if sol.status != "optimal":
        if sol.status == "max_iter" and sol.kkt.max() < 1e-5:
            log.debug("TS oracle accepted a max_iter solution (kkt %.2e)", sol.kkt.max())
        else:
            # the SDR always has the feasible point C = 0, so any other status is a breakdown
            log.debug("TS oracle SDP status %s at lam=%g", sol.status, lam)
            return OracleAnswer(False, None, None, failed=True)
    C = hermitize(np.real(sol.values["C"]))
    We = hermitize(sol.values["We"])
    q = float(sol.objective)
    target = lam * g_k
    c = np.sqrt(np.clip(np.diag(C), 0.0, None))
    margin = q - target
    feasible = margin >= -FEAS_MARGIN * (1.0 + target)
    gamma_c = data.gamma_of(c)
    return OracleAnswer(bool(feasible), TsWitness(c, C, We, q, gamma_c, lam, (t_k, g_k)), margin)


# ------------------------------------------------------------ rank-one step


class RandomizationError(RuntimeError):
    pass


def _budget_scale(c, data: TsProblemData, t: float, W_e: np.ndarray, eh_lines=None) -> float:
    """Largest s with (s c) meeting every per-relay budget at time t."""
    F = data.realization.F
    recv = data.p_o * np.real(np.einsum("kn,kl,ln->n", F.conj(), W_e, F))
    if eh_lines is None:
        cap = (1 - 2 * t) * data.scenario.eta * recv / t
    else:
        cap = np.array([(1 - 2 * t) * min(s * recv[n] + i for s, i in eh_lines[n]) / t for n in range(data.N)])
    c2 = np.asarray(c) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(c2 > 0, cap / c2, np.inf)
    return float(np.sqrt(max(np.min(r), 0.0)))


def extract_rank_one(C: np.ndarray, data: TsProblemData, t: float, W_e: np.ndarray, rng: np.random.Generator | None = None,
                     samples: int = 200, eh_lines=None) -> np.ndarray:
    """Rank-one power vector from an SDR solution ``C``.

    Near rank-one ``C`` yields ``sqrt(lam_1) |v_1|``.  Otherwise Gaussian
    candidates (plus ``sqrt(diag C)``, optimal when only the diagonal is
    constrained) are rectified, scaled into the budgets and chance
    constraints, and the best SNR is kept.
    """
    C = hermitize(np.real(np.asarray(C)))
    N = C.shape[0]
    w, v = eig_hermitian(C)
    if w[0] <= 0:
        return np.zeros(N)
    if N == 1 or w[1] / w[0] <= RANK_ONE_RATIO:
        return np.sqrt(w[0]) * np.abs(np.real(v[:, 0]))
    rng = rng if rng is not None else np.random.default_rng(0)
    L = v * np.sqrt(np.clip(w, 0, None))[None, :]
    cands = [np.sqrt(np.clip(np.diag(C), 0, None))]
    cands += [np.abs(L @ rng.standard_normal(N)) for _ in range(samples)]
    ambs = ambiguity_sets(data.realization, data.scenario)
    scored = []
    for c in cands:
        s = _budget_scale(c, data, t, W_e, eh_lines)
        if not np.isfinite(s) or s <= 0:
            continue
        scored.append((data.gamma_of(s * c), s, c))
    scored.sort(key=lambda x: -x[0])
    # the chance scaling needs an SDP per candidate; only check the best few
    for _, s, c in scored[:10]:
        cc = s * c
        for amb in ambs:
            if amb.zeta < 1:
                cc = cc * min(1.0, math.sqrt(max_feasible_scale(cc**2, amb)) * (1 - 1e-9))
        return cc
    raise RandomizationError("no randomized candidate could be scaled to feasibility")


# --------------------------------------------------------- W1 alternation


def update_info_beamformer(realization: ChannelRealization, c, strategy: str, p_o: float = 1.0,
                           W1: np.ndarray | None = None, weights=None) -> np.ndarray:
    """Information beamformer for the first hop (heuristic strategies)."""
    F = realization.F
    K, N = F.shape
    c = np.asarray(c, dtype=float)
    if strategy == "uniform":
        return np.eye(K) / K
    if strategy == "mrt_strongest":
        n = int(np.argmax(np.linalg.norm(F, axis=0) * c)) if np.any(c > 0) else int(np.argmax(np.linalg.norm(F, axis=0)))
        f = F[:, n]
        nf = np.linalg.norm(f)
        return np.outer(f, f.conj()) / nf**2 if nf > 0 else np.eye(K) / K
    if strategy == "alt_sdr":
        if weights is None:
            h2 = np.real(np.einsum("kn,kl,ln->n", F.conj(), W1, F)) if W1 is not None else np.sum(np.abs(F) ** 2, axis=0) / K
            weights = c * np.abs(realization.g) / (1.0 + p_o * h2)
        weights = np.asarray(weights, dtype=float)
        S = (F * weights[None, :]) @ F.conj().T
        if not np.any(weights > 0):
            S = F @ F.conj().T
        _, vecs = eig_hermitian(S)
        u = vecs[:, 0]
        return np.outer(u, u.conj())
    raise ValueError(f"unknown W1 strategy {strategy!r}")


def initial_info_beamformer(realization: ChannelRealization) -> np.ndarray:
    F = realization.F
    _, vecs = eig_hermitian(F @ F.conj().T)
    u = vecs[:, 0]
    return np.outer(u, u.conj())


# ------------------------------------------------------------------- driver


@dataclass
class TsSolution:
    t: float
    gamma: float
    c: np.ndarray
    W_e: np.ndarray
    C: np.ndarray
    W1: np.ndarray
    throughput: float
    rank_one: bool
    trace: MonotonicTrace
    converged: bool
    rounds: int = 1
    iterations: int = 0
    received_power: np.ndarray = field(default_factory=lambda: np.zeros(0))
    w_e: np.ndarray | None = None

    @property
    def p(self) -> np.ndarray:
        return self.c**2

    @property
    def w(self) -> float:
        """Energy-harvesting share of the slot."""
        return 1.0 - 2.0 * self.t


def ts_objective(z) -> float:
    return float(z[0] * np.log2(1.0 + z[1]))


def solve_ts_fixed_w1(scenario: NetworkScenario, realization: ChannelRealization, W1: np.ndarray,
                      eps: float | None = None, max_iter: int | None = None) -> TsSolution:
    """Monotonic optimization over (t, gamma) with the information beamformer fixed."""
    eps = scenario.epsilon if eps is None else eps
    data = build_ts_matrices(realization, W1, scenario.p_o, scenario)
    K, N = realization.K, realization.N
    eh_lines = _eh_lines(data)
    gmax = data.gamma_cap()
    if gmax <= 0:
        tr = MonotonicTrace(converged=True, incumbent=np.zeros(2), eps=eps)
        return TsSolution(0.0, 0.0, np.zeros(N), np.eye(K) / K, np.zeros((N, N)), W1, 0.0, True, tr, True,
                          received_power=np.zeros(N))
    oracle = lambda z, lam: ts_projection_feasibility(data, lam, z, eh_lines)
    trace = run_monotonic(np.array([0.5, 1.01 * gmax]), ts_objective, oracle, eps=eps,
                          max_iter=max_iter or scenario.max_iter)
    wit: TsWitness | None = trace.witness
    if wit is None:
        return TsSolution(0.0, 0.0, np.zeros(N), np.eye(K) / K, np.zeros((N, N)), W1, 0.0, True, trace,
                          trace.converged, iterations=trace.iterations, received_power=np.zeros(N))
    t = float(trace.incumbent[0])
    C = wit.C
    w_eig = np.linalg.eigvalsh(C)[::-1]
    rank_one = bool(N == 1 or w_eig[0] <= 0 or w_eig[1] / w_eig[0] <= RANK_ONE_RATIO)
    c = wit.c
    if not rank_one:
        c_r = extract_rank_one(C, data, t, wit.W_e, eh_lines=eh_lines)
        if data.gamma_of(c_r) > data.gamma_of(c):
            c = c_r
    gamma = data.gamma_of(c)
    We = wit.W_e
    F = realization.F
    recv = data.p_o * np.real(np.einsum("kn,kl,ln->n", F.conj(), We, F))
    we_w, we_v = eig_hermitian(We)
    w_e = we_v[:, 0] * np.sqrt(max(we_w[0], 0.0)) if we_w[0] > 0 else None
    return TsSolution(t, gamma, c, We, C, W1, ts_objective((t, gamma)), rank_one, trace, trace.converged,
                      iterations=trace.iterations, received_power=recv, w_e=w_e)


def optimize_ts(scenario: NetworkScenario, realization: ChannelRealization, eps: float | None = None,
                rounds: int | None = None, W1: np.ndarray | None = None) -> TsSolution:
    """Alternate polyblock optimization of (t, c, W_e) with W1 updates.

    A W1 update is kept only if it raises the throughput; stops when the gain
    drops below ``eps`` or after ``rounds`` rounds.
    """
    eps = scenario.epsilon if eps is None else eps
    rounds = scenario.w1_rounds if rounds is None else rounds
    W1 = initial_info_beamformer(realization) if W1 is None else W1
    best = solve_ts_fixed_w1(scenario, realization, W1, eps)
    total_iters = best.iterations
    done = 1
    for _ in range(rounds - 1):
        W1_new = update_info_beamformer(realization, best.c, scenario.w1_strategy, scenario.p_o, W1=best.W1)
        if np.allclose(W1_new, best.W1, atol=1e-12):
            break
        cand = solve_ts_fixed_w1(scenario, realization, W1_new, eps)
        total_iters += cand.iterations
        done += 1
        if cand.throughput > best.throughput + eps:
            best = cand
        else:
            break
    best.rounds = done
    best.iterations = total_iters
    return best


def verify_ts_solution(sol: TsSolution, scenario: NetworkScenario, realization: ChannelRealization,
                       budget_tol: float = 1e-6, chance_slack: float = 1e-4) -> dict:
    """Post-hoc constraint checks on a returned TS solution."""
    F = realization.F
    t = sol.t
    recv = scenario.p_o * np.real(np.einsum("kn,kl,ln->n", F.conj(), sol.W_e, F))
    if scenario.eh_model == "nonlinear":
        model = scenario.eh()
        harvest = np.array([model.harvest(max(recv[n], 0.0), n) for n in range(realization.N)])
    else:
        harvest = scenario.eta * recv
    lhs = t * sol.p
    rhs = (1 - 2 * t) * harvest
    scale = 1.0 + np.max(np.abs(rhs), initial=0.0)
    budget_ok = bool(np.all(lhs - rhs <= budget_tol * scale))
    trace_ok = bool(np.real(np.trace(sol.W_e)) <= 1 + 1e-6)
    probs = [worst_case_violation(sol.c, amb) for amb in ambiguity_sets(realization, scenario)]
    chance_ok = all(p <= scenario.zeta + chance_slack for p in probs)
    return {"budget": budget_ok, "trace": trace_ok, "chance": chance_ok, "violation": probs,
            "ok": budget_ok and trace_ok and chance_ok}
