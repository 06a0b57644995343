"""Delay-optimal burst policies, throughput, and the classical ARQ baselines."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .markov import (
    CompletionProfile,
    Policy,
    expected_completion,
    state_completion_time,
)
from .params import BitChannel, SystemParams, Timing, derive_timing, with_bit_channel


@dataclass(frozen=True)
class OptimalPolicyResult:
    """An optimized policy, its completion profile, and the per-state search bound used."""

    policy: Policy
    profile: CompletionProfile
    search_bounds_used: tuple[int, ...]


@dataclass(frozen=True)
class ArqParams:
    """Window size and packet size of a Go-Back-N / Selective Repeat sender.

    ARQ data packets carry no encoding coefficients, so packet_bits is
    header + payload only.
    """

    W: int
    packet_bits: int

    def __post_init__(self):
        if self.W < 1:
            raise ValueError("window size must be >= 1")
        if self.packet_bits < 1:
            raise ValueError("packet_bits must be positive")


@dataclass(frozen=True)
class ThroughputPoint:
    """One evaluated (n, M) cell: the block throughput and the policy achieving it."""

    n: int
    M: int
    eta: float
    policy: Policy


def optimal_policy(sys: SystemParams, timing: Timing) -> OptimalPolicyResult:
    """Minimize expected completion time with M one-dimensional integer searches.

    The time from deficit i depends on lower states only, so each N_i is
    optimized given the already-minimized T_1..T_{i-1}.  The search starts
    at N = i and stops once no improvement has appeared for
    max(10, ceil(3/(1-Pe))) consecutive candidates: beyond the minimum the
    N*T_p term grows linearly while the success probability saturates.  A
    hard cap guards pathological parameters.  Ties break toward smaller N.
    """
    Pe, Pa = sys.Pe, sys.Pe_ack
    stall_window = max(10, math.ceil(3.0 / (1.0 - Pe)))
    T: list[float] = [0.0]
    sizes: list[int] = []
    bounds: list[int] = []
    for i in range(1, sys.M + 1):
        cap = math.ceil(10.0 * (i + 10) / (1.0 - Pe))
        best_t = math.inf
        best_n = i
        last_improved = i
        n = i
        for n in range(i, cap + 1):
            t = state_completion_time(i, n, T, Pe, Pa, timing.T_p, timing.T_w)
            if t < best_t:
                best_t, best_n, last_improved = t, n, n
            elif n - last_improved >= stall_window:
                break
        sizes.append(best_n)
        bounds.append(n)
        T.append(best_t)
    policy = Policy(tuple(sizes))
    return OptimalPolicyResult(
        policy=policy,
        profile=expected_completion(policy, sys, timing),
        search_bounds_used=tuple(bounds),
    )


_BRANCH_POINT = -math.exp(-1.0)


def lambert_w_minus1(x: float) -> float:
    """Lower real branch of w*exp(w) = x for x in [-1/e, 0).

    Initial guess: the asymptotic ln(-x) - ln(-ln(-x)) away from the branch
    point, the square-root series at it; then damped Halley refinement of
    the defining equation to 1e-12 relative residual or better.
    """
    if not (_BRANCH_POINT <= x < 0.0):
        raise ValueError("argument must lie in [-1/e, 0)")
    if x == _BRANCH_POINT:
        return -1.0
    if x > -0.25:
        l1 = math.log(-x)
        w = l1 - math.log(-l1)
    else:
        p = -math.sqrt(2.0 * (1.0 + math.e * x))
        w = -1.0 + p - p * p / 3.0 + 11.0 * p**3 / 72.0
    if w > -1.0:
        w = -1.0 - 1e-9
    for _ in range(100):
        ew = math.exp(w)
        f = w * ew - x
        if abs(f) <= 1e-14 * abs(x):
            break
        wp1 = w + 1.0
        step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
        w_next = w - step
        if w_next >= -1.0:
            w_next = 0.5 * (w - 1.0)
        if w_next == w:
            break
        w = w_next
    return w


def _lambert_w_minus1_negexp(s: float) -> float:
    """W_{-1}(-exp(-s)) for large s, where -exp(-s) itself would underflow.

    Fixed point of w = -s - ln(-w); contraction factor 1/|w| makes a few
    sweeps plenty.
    """
    w = -s - math.log(s)
    for _ in range(60):
        w_next = -s - math.log(-w)
        if abs(w_next - w) <= 1e-15 * abs(w):
            return w_next
        w = w_next
    return w


def continuous_optimum_N1(sys: SystemParams, timing: Timing) -> float:
    """Real-valued stationary point of T_1(N) for the single-packet block.

    N* = (1 + W_{-1}(-exp(-1 + ln(Pe)*T_w/T_p))) / ln(Pe) - T_w/T_p.
    The exponent is below -1, so the argument always falls inside
    (-1/e, 0); when it is too small to represent, the branch is evaluated
    from the exponent directly.  Undefined at Pe = 0, where the discrete
    optimum is 1.
    """
    if sys.M != 1:
        raise ValueError("closed form applies to M = 1")
    if not 0.0 < sys.Pe < 1.0:
        raise ValueError("Pe must lie in (0, 1); at Pe = 0 the discrete optimum is 1")
    ratio = timing.T_w / timing.T_p
    ln_pe = math.log(sys.Pe)
    exponent = -1.0 + ln_pe * ratio
    if exponent < -700.0:
        w = _lambert_w_minus1_negexp(-exponent)
    else:
        w = lambert_w_minus1(-math.exp(exponent))
    return (1.0 + w) / ln_pe - ratio


def eta(sys: SystemParams, timing: Timing, policy: Policy) -> float:
    """Block throughput M*n / T_M in bits/second for the given policy."""
    profile = expected_completion(policy, sys, timing)
    if not profile.finite:
        raise ValueError("completion time is not finite under this policy")
    return sys.M * sys.n / profile.T_M


def arq_timing(sys: SystemParams, arq: ArqParams) -> Timing:
    """Timing for an uncoded ARQ sender on the same link (no coefficient overhead)."""
    t_ack = sys.n_ack / sys.R
    return Timing(T_p=arq.packet_bits / sys.R, T_ack=t_ack, T_w=sys.T_rt + t_ack)


def eta_gbn(sys: SystemParams, timing_arq: Timing, arq: ArqParams) -> float:
    """Half-duplex Go-Back-N throughput; the Pe = 0 limit equals Selective Repeat's."""
    cycle = arq.W * timing_arq.T_p + timing_arq.T_w
    if sys.Pe == 0.0:
        return arq.W * sys.n / cycle
    keep = 1.0 - sys.Pe
    # 1 - (1-Pe)**W via expm1 so the small-Pe limit does not cancel away
    window_loss = -math.expm1(arq.W * math.log1p(-sys.Pe))
    return sys.n * keep * window_loss / (cycle * sys.Pe)


def eta_sr(sys: SystemParams, timing_arq: Timing, arq: ArqParams) -> float:
    """Half-duplex Selective Repeat throughput: W*n*(1-Pe) / (W*T_p + T_w)."""
    cycle = arq.W * timing_arq.T_p + timing_arq.T_w
    return arq.W * sys.n * (1.0 - sys.Pe) / cycle


def _optimized_eta(sys: SystemParams, bc: BitChannel) -> tuple[float, Policy]:
    s = with_bit_channel(sys, bc)
    timing = derive_timing(s)
    result = optimal_policy(s, timing)
    return eta(s, timing, result.policy), result.policy


def optimize_packet_bits(sys: SystemParams, bc: BitChannel, n_range) -> ThroughputPoint:
    """Best payload size in `n_range` at fixed M; erasures track n through the bit channel.

    Ties break toward the smaller n.
    """
    candidates = sorted({int(v) for v in n_range})
    if not candidates:
        raise ValueError("n_range must be non-empty")
    best: ThroughputPoint | None = None
    for n in candidates:
        e, policy = _optimized_eta(replace(sys, n=n), bc)
        if best is None or e > best.eta:
            best = ThroughputPoint(n=n, M=sys.M, eta=e, policy=policy)
    return best


def optimize_block_size(sys: SystemParams, bc: BitChannel, M_range) -> ThroughputPoint:
    """Best block size in `M_range` at fixed n; note Pe grows with M through the g*M coefficient bits.

    Ties break toward the smaller M.
    """
    candidates = sorted({int(v) for v in M_range})
    if not candidates:
        raise ValueError("M_range must be non-empty")
    best: ThroughputPoint | None = None
    for m in candidates:
        e, policy = _optimized_eta(replace(sys, M=m), bc)
        if best is None or e > best.eta:
            best = ThroughputPoint(n=sys.n, M=m, eta=e, policy=policy)
    return best


def optimize_joint(sys: SystemParams, bc: BitChannel, n_range, M_range) -> ThroughputPoint:
    """Exhaustive maximization of eta over the (M, n) grid; each cell re-optimizes the policy.

    Ties break toward the lexicographically smaller (M, n).
    """
    n_candidates = sorted({int(v) for v in n_range})
    m_candidates = sorted({int(v) for v in M_range})
    if not n_candidates or not m_candidates:
        raise ValueError("grids must be non-empty")
    best: ThroughputPoint | None = None
    for m in m_candidates:
        for n in n_candidates:
            e, policy = _optimized_eta(replace(sys, M=m, n=n), bc)
            if best is None or e > best.eta:
                best = ThroughputPoint(n=n, M=m, eta=e, policy=policy)
    return best
