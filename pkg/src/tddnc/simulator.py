"""Monte-Carlo execution of the burst/listen protocol under packet and ACK erasures.

Three fidelity modes:

chain     a lost ACK forfeits the round's progress, replicating the analytic
          chain's self-transition exactly;
physical  the receiver keeps whatever arrived; the transmitter retransmits
          for its stale belief until an ACK gets through;
rlnc      as physical, but a packet only counts when the finite-field
          decoder gains rank, so linear-dependence losses are included.

Every run draws its randomness from a substream keyed by
(master_seed, run_index) only, so results are bit-identical regardless of
execution order or parallelism.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .markov import Policy
from .params import SystemParams, Timing
from .rlnc import Decoder, GaloisField, encode

MODES = ("chain", "physical", "rlnc")

# rlnc-mode payload truncation: decodability depends only on the encoding
# vectors, so long payloads add nothing to completion statistics.
MAX_SIM_PAYLOAD_SYMBOLS = 64


@dataclass(frozen=True)
class SimConfig:
    mode: str = "chain"
    runs: int = 10000
    master_seed: int = 0
    field: GaloisField | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must be an unsigned 64-bit integer")
        if self.mode == "rlnc" and self.field is None:
            raise ValueError("rlnc mode requires a field")


@dataclass(frozen=True)
class SimResult:
    """Completion statistics over all runs; histogram buckets are T_p wide."""

    mean_completion: float
    stderr: float
    histogram: tuple[tuple[int, int], ...]
    bucket_width: float
    mean_packets_sent: float
    mean_stops: float
    runs: int


def _rng_for_run(master_seed: int, run_index: int) -> np.random.Generator:
    return np.random.default_rng([master_seed, run_index])


def _run_erasure(policy, Pe, Pe_ack, T_p, T_w, rng, keep_progress):
    # chain mode: keep_progress False; physical mode: True
    deficit = policy.M   # receiver truth
    belief = policy.M    # transmitter view, from the last heard ACK
    elapsed = 0.0
    sent = 0
    stops = 0
    while True:
        n = policy.N[belief - 1]
        k = int(rng.binomial(n, 1.0 - Pe))
        elapsed += n * T_p + T_w
        sent += n
        stops += 1
        if keep_progress:
            deficit = max(deficit - k, 0)
        if rng.random() >= Pe_ack:
            if not keep_progress:
                deficit = max(deficit - k, 0)   # progress counts only when the ACK is heard
            belief = deficit
            if deficit == 0:
                return elapsed, sent, stops


def _run_rlnc(policy, Pe, Pe_ack, T_p, T_w, rng, field, block):
    decoder = Decoder(field, policy.M, block.shape[1])
    belief = policy.M
    elapsed = 0.0
    sent = 0
    stops = 0
    while True:
        n = policy.N[belief - 1]
        elapsed += n * T_p + T_w
        sent += n
        stops += 1
        arrived = rng.random(n) >= Pe
        count = int(arrived.sum())
        if count:
            coeffs = rng.integers(0, field.q, size=(count, policy.M), dtype=np.int64)
            for row in coeffs:
                decoder.absorb(encode(field, block, row))
        deficit = policy.M - decoder.rank
        if rng.random() >= Pe_ack:
            belief = deficit
            if deficit == 0:
                return elapsed, sent, stops


def run_records(
    policy: Policy,
    sys: SystemParams,
    timing: Timing,
    cfg: SimConfig,
    threads: int = 1,
) -> np.ndarray:
    """Per-run records, shape (runs, 3): completion seconds, packets sent, stops."""
    if policy.M != sys.M:
        raise ValueError("policy length must equal the block size M")
    Pe, Pa = sys.Pe, sys.Pe_ack
    T_p, T_w = timing.T_p, timing.T_w

    if cfg.mode == "rlnc":
        field = cfg.field
        symbols = min(math.ceil(sys.n / field.g), MAX_SIM_PAYLOAD_SYMBOLS)
        block_rng = _rng_for_run(cfg.master_seed, 2**32)
        block = block_rng.integers(0, field.q, size=(sys.M, symbols), dtype=np.int64)

        def one(r):
            return _run_rlnc(policy, Pe, Pa, T_p, T_w, _rng_for_run(cfg.master_seed, r), field, block)

    else:
        keep = cfg.mode == "physical"

        def one(r):
            return _run_erasure(policy, Pe, Pa, T_p, T_w, _rng_for_run(cfg.master_seed, r), keep)

    if threads == 1 or cfg.runs < 2:
        rows = [one(r) for r in range(cfg.runs)]
    else:
        chunk = max(64, cfg.runs // (threads * 8))
        spans = [(lo, min(lo + chunk, cfg.runs)) for lo in range(0, cfg.runs, chunk)]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = pool.map(lambda span: [one(r) for r in range(*span)], spans)
            rows = [row for part in chunks for row in part]
    return np.asarray(rows, dtype=np.float64)


def summarize(records: np.ndarray, timing: Timing) -> SimResult:
    """Mean, standard error, T_p-wide histogram, and packet/stop averages."""
    records = np.asarray(records, dtype=np.float64)
    if records.ndim != 2 or records.shape[0] < 1 or records.shape[1] != 3:
        raise ValueError("records must be a non-empty (runs, 3) array")
    times = records[:, 0]
    runs = records.shape[0]
    stderr = float(np.std(times, ddof=1) / math.sqrt(runs)) if runs > 1 else 0.0
    buckets = np.floor(times / timing.T_p).astype(np.int64)
    values, counts = np.unique(buckets, return_counts=True)
    return SimResult(
        mean_completion=float(times.mean()),
        stderr=stderr,
        histogram=tuple((int(v), int(c)) for v, c in zip(values, counts)),
        bucket_width=timing.T_p,
        mean_packets_sent=float(records[:, 1].mean()),
        mean_stops=float(records[:, 2].mean()),
        runs=runs,
    )


def simulate(
    policy: Policy,
    sys: SystemParams,
    timing: Timing,
    cfg: SimConfig,
    threads: int = 1,
) -> SimResult:
    """Run the protocol cfg.runs times and summarize completion statistics."""
    return summarize(run_records(policy, sys, timing, cfg, threads=threads), timing)
