"""Power-splitting scheme: Cauchy relaxation over (X, Y) and its SDP projection.

Relay ``n`` diverts a fraction ``rho_n`` of its received power to the
harvester.  With ``y = theta x o g`` imposed, the SNR equals ``XY / (1 + X)``
where ``X = sum x_n^2 |g_n|^2`` and ``Y = sum y_n^2``.  For a vertex
``(X_k, Y_k)`` the largest feasible ``Y`` along its ray is the optimum of one
SDP, so no bisection is needed.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .chance import add_chance_fragment, ambiguity_sets, worst_case_violation
from .conic import ProgramBuilder, solve
from .matrix import eig_hermitian, hermitize
from .polyblock import MonotonicTrace, PolyblockError, Projection, run_monotonic
from .scenario import ChannelRealization, NetworkScenario
from .ts import eh_minorant

log = logging.getLogger(__name__)

RANK_ONE_RATIO = 1e-6
CLAMP_WARN = 1e-8


def theta_star(z) -> float:
    """Optimal Cauchy coefficient sqrt(Y / X) for the vertex ``z = (X, Y)``."""
    X, Y = float(z[0]), float(z[1])
    if not X > 0:
        raise ValueError("theta* needs X > 0")
    if Y < 0:
        raise ValueError("theta* needs Y >= 0")
    return math.sqrt(Y / X)


def ps_gamma(z) -> float:
    """Relaxed SNR XY / (1 + X); nondecreasing in both coordinates on the orthant."""
    X, Y = float(z[0]), float(z[1])
    return X * Y / (1.0 + X)


def received_power(realization: ChannelRealization, W: np.ndarray, p_o: float) -> np.ndarray:
    """p_o f_n^H W f_n for every relay."""
    F = realization.F
    return p_o * np.real(np.einsum("kn,kl,ln->n", F.conj(), W, F))


def ps_snr(rho, p, W, realization: ChannelRealization, p_o: float) -> float:
    """End-to-end SNR of the original model with coherent relay phases."""
    rho = np.asarray(rho, dtype=float)
    p = np.asarray(p, dtype=float)
    y2 = np.clip((1.0 - rho) * received_power(realization, W, p_o), 0.0, None)
    x2 = np.clip(p, 0.0, None) / (y2 + 1.0)
    g = np.abs(realization.g)
    num = float(np.sum(np.sqrt(x2 * y2) * g)) ** 2
    return num / (1.0 + float(np.sum(x2 * g**2)))


def ps_throughput(gamma: float, half_slot: bool = True) -> float:
    r = math.log2(1.0 + max(gamma, 0.0))
    return 0.5 * r if half_slot else r


# -------------------------------------------------------------------- oracle


@dataclass
class PsWitness:
    kappa: np.ndarray
    p: np.ndarray
    W: np.ndarray
    Wbar: np.ndarray
    q: float
    theta: float
    z: tuple


def _eh_lines(realization: ChannelRealization, scenario: NetworkScenario):
    if scenario.eh_model != "nonlinear":
        return None
    model = scenario.eh()
    p_max = scenario.p_o * np.sum(np.abs(realization.F) ** 2, axis=0)
    return [eh_minorant(model, n, p_max[n]) for n in range(realization.N)]


def ps_program(realization: ChannelRealization, scenario: NetworkScenario, theta: float, eh_lines=None):
    """Convex SDP maximizing sum(kappa) for a fixed Cauchy coefficient ``theta``."""
    N, K = realization.N, realization.K
    F = realization.F
    p_o = scenario.p_o
    g2 = np.abs(realization.g) ** 2
    b = ProgramBuilder()
    b.add_block("p", "nonneg", N)
    b.add_block("kappa", "nonneg", N)
    b.add_block("W", "hpsd", K)
    b.add_block("Wbar", "hpsd", K)
    b.set_objective({"kappa": np.ones(N)})
    for n in range(N):
        e = np.zeros(N)
        e[n] = 1.0
        ff = np.outer(F[:, n], F[:, n].conj())
        if eh_lines is None:
            b.add_constraint({"p": e, "Wbar": -scenario.eta * p_o * ff}, "le", 0.0, f"budget{n}")
        else:
            for j, (slope, icpt) in enumerate(eh_lines[n]):
                b.add_constraint({"p": e, "Wbar": -slope * p_o * ff}, "le", icpt, f"budget{n}.{j}")
        # [[p theta^2 g^2 - kappa, kappa], [kappa, 1]] >= 0
        t_p = np.zeros((2, 2, N))
        t_p[0, 0, n] = theta**2 * g2[n]
        t_k = np.zeros((2, 2, N))
        t_k[0, 0, n] = -1.0
        t_k[0, 1, n] = t_k[1, 0, n] = 1.0
        b.add_lmi(np.array([[0.0, 0.0], [0.0, 1.0]]), {"p": t_p, "kappa": t_k}, label=f"snr{n}")
        b.add_constraint({"kappa": e, "W": -p_o * ff, "Wbar": p_o * ff}, "le", 0.0, f"info{n}")
    b.add_constraint({"W": np.eye(K)}, "le", 1.0, "trace-W")
    b.add_constraint({"Wbar": np.eye(K)}, "le", 1.0, "trace-Wbar")
    for m, amb in enumerate(ambiguity_sets(realization, scenario)):
        add_chance_fragment(b, f"cue{m}_", {"p": np.eye(N)}, amb)
    return b.build()


def ps_feasibility_sdp(realization: ChannelRealization, z_k, lam: float, scenario: NetworkScenario,
                       eh_lines=None, theta: float | None = None,
                       program_fn=ps_program) -> tuple[bool, PsWitness | None, float]:
    """Solve the projection SDP at the vertex ``z_k``.

    Returns ``(feasible, witness, q_upper)``.  With ``y = theta x o g`` both
    coordinate targets reduce to ``||y||^2 >= lam * max(Y_k, theta^2 X_k)``,
    which is ``lam * Y_k`` at the default ``theta = theta_star(z_k)``.
    ``q_upper`` is a certified upper bound on the optimum (the dual
    objective).  ``program_fn`` builds the SDP (a hook for mutation tests).
    """
    X, Y = float(z_k[0]), float(z_k[1])
    N, K = realization.N, realization.K
    if Y <= 0 and theta is None:
        w = PsWitness(np.zeros(N), np.zeros(N), np.eye(K) / K, np.zeros((K, K)), 0.0, 0.0, (X, Y))
        return True, w, 0.0
    theta = theta_star((X, Y)) if theta is None else float(theta)
    prog = program_fn(realization, scenario, theta, eh_lines)
    sol = solve(prog, tol=scenario.solver_tol)
    if sol.status != "optimal" and not (sol.status == "max_iter" and sol.kkt.max() < 1e-5):
        log.debug("PS projection SDP ended with status %s", sol.status)
        return False, None, 0.0
    kappa = np.clip(np.real(sol.values["kappa"]), 0.0, None)
    p = np.clip(np.real(sol.values["p"]), 0.0, None)
    W = hermitize(sol.values["W"])
    Wb = hermitize(sol.values["Wbar"])
    q = float(np.sum(kappa))
    q_up = max(q, float(sol.dual_objective))
    wit = PsWitness(kappa, p, W, Wb, q, theta, (X, Y))
    need = lam * max(Y, theta**2 * X)
    return bool(q >= need * (1.0 - 1e-9)), wit, q_up


def ps_projection(realization: ChannelRealization, scenario: NetworkScenario, eh_lines=None,
                  theta_fn=theta_star, program_fn=ps_program):
    """Projection routine for the polyblock engine: lam = q / Y_k from one SDP."""

    def project(z):
        theta = theta_fn(z)
        _, wit, q_up = ps_feasibility_sdp(realization, z, 1.0, scenario, eh_lines, theta, program_fn)
        # largest target along the ray; equals Y_k when theta = theta*
        Y = max(float(z[1]), theta**2 * float(z[0]))
        if wit is None:
            # the SDP always has the zero point, so this is a solver breakdown; no valid cut exists
            raise PolyblockError(f"PS projection SDP failed at vertex {tuple(float(v) for v in z)}")
        lam = min(1.0, wit.q / Y)
        if lam >= 1.0 - 1e-9:
            return Projection(1.0, 1.0, wit, 1)
        # cut at the certified bound; never claim z itself is excluded-free
        lam_up = min(q_up / Y, 1.0 - 1e-12)
        return Projection(lam, max(lam, lam_up), wit, 1)

    return project


# ------------------------------------------------------------------ recovery


def recover_ps_ratios(W: np.ndarray, Wbar: np.ndarray, F: np.ndarray) -> np.ndarray:
    """rho_n = f_n^H Wbar f_n / f_n^H W f_n, clamped to [0, 1]."""
    fw = np.real(np.einsum("kn,kl,ln->n", F.conj(), W, F))
    fwb = np.real(np.einsum("kn,kl,ln->n", F.conj(), Wbar, F))
    rho = np.zeros(F.shape[1])
    for n in range(F.shape[1]):
        if fw[n] <= 0:
            log.warning("relay %d receives no power; rho set to 0", n)
            continue
        r = fwb[n] / fw[n]
        c = min(max(r, 0.0), 1.0)
        if abs(c - r) > CLAMP_WARN:
            log.warning("rho_%d clamped from %.3g", n, r)
        rho[n] = c
    return rho


def tightened_recovery(wit: PsWitness, realization: ChannelRealization, p_o: float) -> tuple[np.ndarray, np.ndarray]:
    """(rho, p) meeting the relaxation's equality case exactly.

    Raises ``rho`` until the information power equals ``kappa_n`` and lowers
    ``p`` to ``kappa (kappa + 1) / (theta^2 |g|^2)``; both moves keep the budget
    and chance constraints.
    """
    fw = received_power(realization, wit.W, p_o)
    g2 = np.abs(realization.g) ** 2
    rho = np.ones_like(fw)
    p = np.zeros_like(fw)
    for n in range(fw.size):
        if fw[n] > 0:
            rho[n] = min(max(1.0 - wit.kappa[n] / fw[n], 0.0), 1.0)
        if wit.theta > 0 and g2[n] > 0:
            p[n] = min(wit.p[n], wit.kappa[n] * (wit.kappa[n] + 1.0) / (wit.theta**2 * g2[n]))
    return rho, p


def _rank_one_candidates(W: np.ndarray, rng: np.random.Generator, samples: int) -> list[np.ndarray]:
    """Unit-trace-preserving beamformers drawn from the covariance W."""
    w, v = eig_hermitian(W)
    tr = float(np.real(np.trace(W)))
    if w[0] <= 0 or tr <= 0:
        return []
    L = v * np.sqrt(np.clip(w, 0, None))[None, :]
    cands = [v[:, 0] * math.sqrt(tr)]
    K = W.shape[0]
    for _ in range(samples):
        xi = L @ ((rng.standard_normal(K) + 1j * rng.standard_normal(K)) / math.sqrt(2.0))
        nx = np.linalg.norm(xi)
        if nx > 0:
            cands.append(xi * math.sqrt(tr) / nx)
    return cands


@dataclass
class PsSolution:
    X: float
    Y: float
    rho: np.ndarray
    p: np.ndarray
    W_p: np.ndarray
    Wbar_p: np.ndarray
    kappa: np.ndarray
    theta: float
    gamma: float  # original SNR of the returned decision
    gamma_relaxed: float
    throughput: float
    trace: MonotonicTrace
    converged: bool
    rank_one: bool = True
    iterations: int = 0
    received_power: np.ndarray = field(default_factory=lambda: np.zeros(0))
    w_p: np.ndarray | None = None
    recovery: str = "ratio"


def _decision_for(wit: PsWitness, realization: ChannelRealization, scenario: NetworkScenario, eh_lines,
                  rng: np.random.Generator, samples: int = 200):
    """Best feasible (rho, p, W) recoverable from an SDP witness."""
    p_o = scenario.p_o
    options = []
    rho_r = recover_ps_ratios(wit.W, wit.Wbar, realization.F)
    options.append(("ratio", rho_r, wit.p))
    rho_t, p_t = tightened_recovery(wit, realization, p_o)
    options.append(("tightened", rho_t, p_t))
    w_eig, w_vec = eig_hermitian(wit.W)
    rank_one = bool(w_eig[0] <= 0 or w_eig.size == 1 or w_eig[1] / w_eig[0] <= RANK_ONE_RATIO)
    if rank_one:
        W = wit.W
        best = max(options, key=lambda o: ps_snr(o[1], o[2], W, realization, p_o))
        return best[0], best[1], best[2], W, True
    # physical beamformer must be rank one: keep rho, shrink p into the new budgets
    best = None
    for w in _rank_one_candidates(wit.W, rng, samples):
        Wc = np.outer(w, w.conj())
        recv = received_power(realization, Wc, p_o)
        for name, rho, p in options:
            cap = _harvest(rho * recv, scenario, eh_lines)
            pc = np.minimum(p, cap)
            val = ps_snr(rho, pc, Wc, realization, p_o)
            if best is None or val > best[0]:
                best = (val, name, rho, pc, Wc)
    if best is None:
        return "ratio", rho_r, wit.p * 0.0, wit.W, False
    return best[1], best[2], best[3], best[4], False


def _harvest(power_in: np.ndarray, scenario: NetworkScenario, eh_lines=None) -> np.ndarray:
    if eh_lines is None:
        return scenario.eta * np.asarray(power_in)
    return np.array([min(s * power_in[n] + i for s, i in eh_lines[n]) for n in range(len(power_in))])


def initial_ps_vertex(realization: ChannelRealization, scenario: NetworkScenario) -> np.ndarray:
    """(eta g_max f_bar p_o, f_bar p_o), the coordinate-wise bounds on (X, Y)."""
    g2 = np.abs(realization.g) ** 2
    fbar = float(np.sum(np.abs(realization.F) ** 2))
    p_o = scenario.p_o
    X0 = scenario.eta * float(np.max(g2)) * fbar * p_o
    if scenario.eh_model == "nonlinear":
        X0 = max(X0, float(np.max(g2)) * float(np.sum(scenario.eh().nu)))
    return np.array([X0, fbar * p_o])


def optimize_ps(scenario: NetworkScenario, realization: ChannelRealization, eps: float | None = None,
                max_iter: int | None = None, rng: np.random.Generator | None = None,
                theta_fn=theta_star, program_fn=ps_program) -> PsSolution:
    """Polyblock search over (X, Y) with the relaxed SNR, then recover (rho, p, W_p).

    ``theta_fn`` and ``program_fn`` replace the Cauchy coefficient rule and the
    projection SDP builder; they exist so that the validation suite can check
    that it detects broken variants.
    """
    eps = scenario.epsilon if eps is None else eps
    N, K = realization.N, realization.K
    eh_lines = _eh_lines(realization, scenario)
    v0 = initial_ps_vertex(realization, scenario)
    empty = lambda tr: PsSolution(0.0, 0.0, np.zeros(N), np.zeros(N), np.eye(K) / K, np.zeros((K, K)), np.zeros(N),
                                  0.0, 0.0, 0.0, 0.0, tr, tr.converged, iterations=tr.iterations,
                                  received_power=received_power(realization, np.eye(K) / K, scenario.p_o))
    if not np.all(v0 > 0):
        return empty(MonotonicTrace(converged=True, incumbent=np.zeros(2), eps=eps))
    trace = run_monotonic(v0, ps_gamma, project=ps_projection(realization, scenario, eh_lines, theta_fn, program_fn), eps=eps,
                          max_iter=max_iter or scenario.max_iter)
    wit: PsWitness | None = trace.witness
    if wit is None or wit.q <= 0:
        return empty(trace)
    rng = rng if rng is not None else np.random.default_rng(scenario.seed)
    name, rho, p, W, rank_one = _decision_for(wit, realization, scenario, eh_lines, rng)
    gamma = ps_snr(rho, p, W, realization, scenario.p_o)
    X, Y = float(trace.incumbent[0]), float(trace.incumbent[1])
    w_eig, w_vec = eig_hermitian(W)
    w_p = w_vec[:, 0] * math.sqrt(max(w_eig[0], 0.0))
    return PsSolution(X, Y, rho, p, W, wit.Wbar, wit.kappa, wit.theta, gamma, ps_gamma((X, Y)),
                      ps_throughput(gamma, scenario.ps_half_slot), trace, trace.converged, rank_one,
                      trace.iterations, received_power(realization, W, scenario.p_o), w_p, name)


def verify_ps_solution(sol: PsSolution, scenario: NetworkScenario, realization: ChannelRealization,
                       budget_tol: float = 1e-6, chance_slack: float = 1e-4) -> dict:
    """Post-hoc checks of the original PS constraints on a returned decision."""
    recv = received_power(realization, sol.W_p, scenario.p_o)
    if scenario.eh_model == "nonlinear":
        model = scenario.eh()
        cap = np.array([model.harvest(max(sol.rho[n] * recv[n], 0.0), n) for n in range(realization.N)])
    else:
        cap = scenario.eta * sol.rho * recv
    scale = 1.0 + np.max(np.abs(cap), initial=0.0)
    budget_ok = bool(np.all(sol.p - cap <= budget_tol * scale))
    rho_ok = bool(np.all((sol.rho >= 0) & (sol.rho <= 1)))
    trace_ok = bool(np.real(np.trace(sol.W_p)) <= 1 + 1e-6)
    c = np.sqrt(np.clip(sol.p, 0, None))
    probs = [worst_case_violation(c, amb) for amb in ambiguity_sets(realization, scenario)]
    chance_ok = all(v <= scenario.zeta + chance_slack for v in probs)
    return {"budget": budget_ok, "rho": rho_ok, "trace": trace_ok, "chance": chance_ok, "violation": probs,
            "ok": budget_ok and rho_ok and trace_ok and chance_ok}
