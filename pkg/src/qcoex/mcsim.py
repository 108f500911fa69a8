"""Event-level Monte Carlo of the pulsed pair source, noise and detectors.

Timestamps are float64 picoseconds with pulse ``k`` centred at ``k * T``.
Each receiver is a two-output polarization analyzer, so every event carries
an output label (0 or 1) as well as an origin tag. Pair emission is modelled
per polarization mode: two independent modes, each with mean ``mu/2``, whose
photons land in matching analyzer outputs.

Work is split into blocks of pulses. Each block draws from its own
generator seeded by ``(seed, block index)``, so streams do not depend on the
number of workers.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DomainError

TAG_PAIR, TAG_NOISE, TAG_DARK = 0, 1, 2
TAG_NAMES = {TAG_PAIR: "pair", TAG_NOISE: "noise", TAG_DARK: "dark"}
_FWHM_TO_SIGMA = 1.0 / (2.0 * math.sqrt(2.0 * math.log(2.0)))


@dataclass(frozen=True)
class ArmSim:
    eta: float  # pair-photon detection probability, detector included
    noise_cps: float = 0.0  # detector-referred
    dark_cps: float = 0.0
    jitter_fwhm: float = 50.0  # ps

    def __post_init__(self):
        if not 0.0 <= self.eta <= 1.0:
            raise DomainError("arm transmission must be in [0, 1]")
        if self.noise_cps < 0 or self.dark_cps < 0 or self.jitter_fwhm < 0:
            raise DomainError("rates and jitter must be >= 0")


@dataclass(frozen=True)
class SimConfig:
    n_pulses: int
    seed: int = 0
    mu: float = 0.01
    signal: ArmSim = ArmSim(0.1)
    idler: ArmSim = ArmSim(0.1)
    rep_rate: float = 416.7e6
    window: float = 600.0  # ps, full width
    basis: str = "HV"
    phase: float = 0.0
    statistics: str = "thermal"
    block_pulses: int = 1 << 22

    def __post_init__(self):
        if int(self.n_pulses) <= 0:
            raise DomainError("n_pulses must be > 0")
        if self.mu < 0:
            raise DomainError("mu must be >= 0")
        if self.statistics not in ("thermal", "poisson"):
            raise DomainError(f"unknown pair statistics {self.statistics!r}")
        if self.basis not in ("HV", "DA"):
            raise DomainError(f"unknown analyzer basis {self.basis!r}")
        if self.block_pulses <= 0 or self.window <= 0 or self.rep_rate <= 0:
            raise DomainError("block size, window and repetition rate must be > 0")

    @property
    def period(self):
        return 1e12 / self.rep_rate

    @property
    def duration(self):
        """Simulated time in seconds."""
        return self.n_pulses / self.rep_rate

    @classmethod
    def from_arms(cls, source, signal, idler, coincidence, n_pulses, seed=0, **kw):
        """Build from rates-module arm models (noise becomes detector-referred)."""

        def conv(arm):
            d = arm.detector
            return ArmSim(arm.transmission, arm.noise_cps * d.efficiency, d.dark_rate, d.jitter_fwhm)

        return cls(int(n_pulses), seed, source.mu, conv(signal), conv(idler), source.rep_rate,
                   coincidence.window, phase=source.phase, **kw)


@dataclass
class EventStream:
    arm: str
    times: np.ndarray  # ps, sorted
    tags: np.ndarray  # int8 origin
    labels: np.ndarray  # int8 analyzer output

    def __len__(self):
        return self.times.size

    def select(self, label=None, tag=None):
        mask = np.ones(self.times.size, dtype=bool)
        if label is not None:
            mask &= self.labels == label
        if tag is not None:
            mask &= self.tags == tag
        return self.times[mask]


def _nonzero_pulses(rng, n, q):
    """Sorted indices of pulses in ``[0, n)`` that are occupied with probability q."""
    if q <= 0.0:
        return np.empty(0, dtype=np.int64)
    if q >= 1.0:
        return np.arange(n, dtype=np.int64)
    chunks = []
    pos = -1
    while True:
        k = int(n * q + 6.0 * math.sqrt(n * q) + 16)
        idx = pos + np.cumsum(rng.geometric(q, size=k))
        chunks.append(idx)
        pos = int(idx[-1])
        if pos >= n:
            break
    idx = np.concatenate(chunks)
    return idx[idx < n]


def _occupation(rng, size, mean, statistics):
    """Pair numbers conditioned on being >= 1."""
    if statistics == "thermal":
        q = mean / (1.0 + mean)
        return rng.geometric(1.0 - q, size=size)
    # zero-truncated Poisson by inversion
    u = rng.uniform(math.exp(-mean), 1.0, size=size)
    k = np.ones(size, dtype=np.int64)
    p = mean * math.exp(-mean)
    cdf = math.exp(-mean) + p
    active = u > cdf
    j = 1
    while active.any():
        k[active] += 1
        j += 1
        p *= mean / j
        cdf += p
        active &= u > cdf
    return k


def _block(config: SimConfig, b):
    rng = np.random.default_rng(np.random.SeedSequence(config.seed, spawn_key=(b,)))
    p0 = b * config.block_pulses
    n = min(config.block_pulses, config.n_pulses - p0)
    period = config.period
    t0, t1 = p0 * period, (p0 + n) * period
    mode_mean = 0.5 * config.mu
    if config.statistics == "thermal":
        q = mode_mean / (1.0 + mode_mean)
    else:
        q = -math.expm1(-mode_mean)
    flip = 0.5 * (1.0 - math.cos(config.phase)) if config.basis == "DA" else 0.0

    parts = {"signal": [], "idler": []}
    for mode in (0, 1):
        idx = _nonzero_pulses(rng, n, q)
        npairs = _occupation(rng, idx.size, mode_mean, config.statistics)
        for arm_name, arm in (("signal", config.signal), ("idler", config.idler)):
            hits = rng.binomial(npairs, arm.eta)
            t = np.repeat((p0 + idx).astype(np.float64) * period, hits)
            t += rng.normal(0.0, arm.jitter_fwhm * _FWHM_TO_SIGMA, size=t.size)
            lab = np.full(t.size, mode, dtype=np.int8)
            if arm_name == "idler" and flip > 0.0:
                lab ^= (rng.random(t.size) < flip).astype(np.int8)
            parts[arm_name].append((t, np.full(t.size, TAG_PAIR, dtype=np.int8), lab))

    for arm_name, arm in (("signal", config.signal), ("idler", config.idler)):
        for tag, rate in ((TAG_NOISE, arm.noise_cps), (TAG_DARK, arm.dark_cps)):
            k = rng.poisson(rate * (t1 - t0) * 1e-12)
            t = rng.uniform(t0, t1, size=k)
            lab = rng.integers(0, 2, size=k, dtype=np.int8)
            parts[arm_name].append((t, np.full(k, tag, dtype=np.int8), lab))

    out = {}
    for arm_name, items in parts.items():
        t = np.concatenate([p[0] for p in items])
        order = np.argsort(t, kind="stable")
        out[arm_name] = (t[order],
                         np.concatenate([p[1] for p in items])[order],
                         np.concatenate([p[2] for p in items])[order])
    return out


def simulate_events(config: SimConfig, workers=1):
    """Signal and idler event streams for ``config.n_pulses`` pulses."""
    n_blocks = -(-int(config.n_pulses) // config.block_pulses)
    if workers > 1 and n_blocks > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(lambda b: _block(config, b), range(n_blocks)))
    else:
        blocks = [_block(config, b) for b in range(n_blocks)]
    streams = []
    for arm_name in ("signal", "idler"):
        t = np.concatenate([blk[arm_name][0] for blk in blocks])
        tags = np.concatenate([blk[arm_name][1] for blk in blocks])
        lab = np.concatenate([blk[arm_name][2] for blk in blocks])
        # jitter can carry an event across a block edge
        order = np.argsort(t, kind="stable")
        streams.append(EventStream(arm_name, t[order], tags[order], lab[order]))
    return tuple(streams)


def poisson_stream(rate, duration, seed=0):
    """Sorted arrival times (ps) of a homogeneous Poisson process."""
    if rate < 0 or duration < 0:
        raise DomainError("rate and duration must be >= 0")
    rng = np.random.default_rng(seed)
    k = rng.poisson(rate * duration)
    return np.sort(rng.uniform(0.0, duration * 1e12, size=k))


@dataclass(frozen=True)
class CoincidenceSummary:
    duration: float  # s
    parallel: int
    orthogonal: int
    delayed: int
    ccr: float
    ccr_stderr: float
    accidentals: float
    accidentals_stderr: float
    visibility: float
    visibility_stderr: float

    def to_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def count_coincidences(signal: EventStream, idler: EventStream, window, period, duration):
    """Windowed coincidences split by analyzer class, plus a delayed-window copy.

    ``window`` is the full width in ps. The delayed window pairs each signal
    event with idler events one pulse ``period`` later, which estimates the
    accidental rate.
    """
    half = 0.5 * window
    s = [signal.select(label=k) for k in (0, 1)]
    i = [idler.select(label=k) for k in (0, 1)]
    par = kernels.count_window(s[0], i[0], half) + kernels.count_window(s[1], i[1], half)
    orth = kernels.count_window(s[0], i[1], half) + kernels.count_window(s[1], i[0], half)
    delayed = kernels.count_window(signal.times, idler.times, half, offset=period)
    total = par + orth
    if total > 0:
        vis = (par - orth) / total
        vis_err = 2.0 * math.sqrt(par * orth / total ** 3) if par and orth else 1.0 / total
    else:
        vis, vis_err = float("nan"), float("nan")
    return CoincidenceSummary(
        duration, par, orth, delayed,
        total / duration, math.sqrt(total) / duration,
        delayed / duration, math.sqrt(delayed) / duration,
        vis, vis_err,
    )


@dataclass(frozen=True)
class NfoldResult:
    count: int
    rate: float
    stderr: float
    duration: float


def nfold_coincidences(streams, window, duration, n_batches=20):
    """n-fold coincidences referenced to the first stream.

    Counts every tuple with one event from each other stream inside
    ``+-window/2`` of a stream-0 event. The standard error comes from
    batch means over ``n_batches`` equal slices of the reference stream.
    """
    streams = [np.asarray(s, dtype=np.float64) for s in streams]
    if len(streams) < 2:
        raise DomainError("n-fold coincidences need at least two streams")
    if any(s.size == 0 for s in streams):
        return NfoldResult(0, 0.0, 0.0, duration)
    half = 0.5 * window
    edges = np.linspace(0.0, duration * 1e12, n_batches + 1)
    cuts = np.searchsorted(streams[0], edges[1:-1])
    counts = np.array([kernels.nfold_count([ref] + streams[1:], half)
                       for ref in np.split(streams[0], cuts)], dtype=float)
    total = int(counts.sum())
    batch_dur = duration / n_batches
    stderr = float(np.std(counts / batch_dur, ddof=1) / math.sqrt(n_batches)) if n_batches > 1 else 0.0
    return NfoldResult(total, total / duration, stderr, duration)


@dataclass
class MonteCarloRun:
    config: SimConfig
    signal: EventStream
    idler: EventStream
    summary: CoincidenceSummary = field(init=False)

    def __post_init__(self):
        self.summary = count_coincidences(self.signal, self.idler, self.config.window,
                                          self.config.period, self.config.duration)

    def singles(self):
        d = self.config.duration
        return len(self.signal) / d, len(self.idler) / d

    def to_dict(self):
        s_s, s_i = self.singles()
        d = self.config.duration
        out = self.summary.to_dict()
        out.update({
            "singles_signal": s_s, "singles_signal_stderr": math.sqrt(len(self.signal)) / d,
            "singles_idler": s_i, "singles_idler_stderr": math.sqrt(len(self.idler)) / d,
            "n_pulses": int(self.config.n_pulses), "seed": int(self.config.seed),
            "statistics": self.config.statistics,
        })
        return out


def run(config: SimConfig, workers=1):
    signal, idler = simulate_events(config, workers)
    return MonteCarloRun(config, signal, idler)


def events_csv(*streams):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["arm", "t_ps", "tag", "label"])
    for s in streams:
        for t, tag, lab in zip(s.times.tolist(), s.tags.tolist(), s.labels.tolist()):
            w.writerow([s.arm, repr(t), TAG_NAMES[tag], lab])
    return buf.getvalue()
