"""Variable-stopping-time algorithms, amplification, and estimation.

The simulator tracks amplitudes per clock-value branch instead of
materializing phase-estimation registers: a branch is (clock, flag, label)
with a complex amplitude, where clock 0 means still running and clock j means
stopped at stage j.  Gapped phase estimation enters as a per-eigenbranch
two-outcome split with amplitudes from the exact boosted outcome
distribution, so every probability the analysis uses is preserved while the
register count stays inside the qubit budget.

All stochastic sampling flows from a caller-supplied seeded generator; runs
are reproducible bit-for-bit given a seed.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Callable

import numpy as np
from scipy.stats import binom

from .errors import PreconditionError
from .ledger import CostLedger

FLAG_NEUTRAL = "n"
FLAG_GOOD = "g"
FLAG_BAD = "b"

# -- exact amplitude-amplification algebra ----------------------------------


def aa_amplitude(alpha: float, k: int) -> float:
    """Amplitude after k amplification steps: sin((2k+1) arcsin alpha), exactly."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"amplitude must lie in [0, 1], got {alpha}")
    if k < 0:
        raise ValueError("k must be non-negative")
    return math.sin((2 * k + 1) * math.asin(alpha))


def aa_lower_bound(alpha: float, k: int) -> float:
    """sqrt(1 - (2k+1)^2 alpha^2 / 3) (2k+1) alpha, valid for k <= pi/(4 asin a) - 1/2."""
    if k > math.pi / (4.0 * math.asin(alpha)) - 0.5:
        raise PreconditionError("k exceeds the no-wrap-around regime of the bound")
    return math.sqrt(max(0.0, 1.0 - (2 * k + 1) ** 2 * alpha**2 / 3.0)) * (2 * k + 1) * alpha


def amplification_ratio_check(alpha: float, k: int) -> tuple[float, float]:
    """(ratio, bound) with ratio = (2k+1)/(amplified/alpha) <= 1 + 3/2 amplified^2.

    Raises if (2k+1) arcsin(alpha) > pi/2 (overamplification).
    """
    theta = math.asin(alpha)
    if (2 * k + 1) * theta > math.pi / 2.0 + 1e-12:
        raise PreconditionError("overamplification: (2k+1) arcsin(alpha) > pi/2")
    amplified = aa_amplitude(alpha, k)
    ratio = (2 * k + 1) * alpha / amplified
    return ratio, 1.0 + 1.5 * amplified**2


def aa_amplify(state: np.ndarray, projector: np.ndarray, k: int) -> np.ndarray:
    """k exact amplitude-amplification steps on an explicit state.

    The amplified state stays in span{P psi, (I-P) psi}; components inside the
    projector scale uniformly, so relative structure is preserved.
    """
    psi = np.asarray(state, dtype=complex)
    good = projector @ psi
    bad = psi - good
    a = np.linalg.norm(good)
    theta = math.asin(min(1.0, a))
    s = math.sin((2 * k + 1) * theta)
    c = math.cos((2 * k + 1) * theta)
    out = np.zeros_like(psi)
    if a > 0:
        out += good / a * s
    nb = np.linalg.norm(bad)
    if nb > 0:
        out += bad / nb * c
    return out


# -- gapped phase estimation -------------------------------------------------


def _dirichlet(n: int, x: np.ndarray) -> np.ndarray:
    """sum_{t=-n}^{n} e^{itx} = sin((n+1/2)x)/sin(x/2), with its x -> 0 limit."""
    x = np.asarray(x, dtype=float)
    den = np.sin(x / 2.0)
    tiny = np.abs(den) < 1e-14
    num = np.sin((n + 0.5) * x)
    return np.where(tiny, 2.0 * n + 1.0, num / np.where(tiny, 1.0, den))


@lru_cache(maxsize=4096)
def gpe_split(lam: float, phi: float, eps: float) -> tuple[float, float]:
    """Exact boosted GPE branch amplitudes (|alpha_0|, |alpha_1|).

    Single-round phase estimation on eigenphase lam with grid spacing phi/8,
    thresholded at 1.5 phi, majority-boosted over 2 ceil(3 ln(1/eps)) + 1
    repetitions.  Guarantees |alpha_1| <= eps when |lam| <= phi and
    |alpha_0| <= eps when 2 phi <= |lam| <= 1.
    """
    if not 0.0 < phi <= 0.25:
        raise PreconditionError(f"phi must lie in (0, 1/4], got {phi}")
    t_steps = int(math.ceil(16.0 * math.pi / phi))
    if t_steps % 2 == 0:
        t_steps += 1
    n = (t_steps - 1) // 2
    z = np.arange(-n, n + 1)
    grid = 2.0 * math.pi * z / t_steps
    amps = _dirichlet(n, lam - grid) / t_steps
    p_large = float(np.sum(amps[np.abs(grid) >= 1.5 * phi] ** 2))
    p_large = min(max(p_large, 0.0), 1.0)
    reps = 2 * int(math.ceil(3.0 * math.log(1.0 / min(eps, 0.5)))) + 1
    a1_sq = float(binom.sf((reps - 1) // 2, reps, p_large))
    a1 = math.sqrt(min(max(a1_sq, 0.0), 1.0))
    return math.sqrt(max(0.0, 1.0 - a1 * a1)), a1


@dataclass(frozen=True)
class GPETransform:
    """Per-eigenbranch two-outcome split of a gapped phase estimation run."""

    phi: float
    eps: float
    eigenphases: np.ndarray
    eigenvectors: np.ndarray
    ledger: CostLedger

    def split(self, eigenphase: float) -> tuple[float, float]:
        return gpe_split(eigenphase, self.phi, self.eps)

    def branch_amplitudes(self) -> list[tuple[float, float, float]]:
        return [(lam,) + self.split(lam) for lam in self.eigenphases]


def gapped_phase_estimation(
    unitary: np.ndarray, phi: float, eps: float, unit_cost: CostLedger | None = None
) -> GPETransform:
    """GPE branch transform for a unitary with eigenphases in [-1, 1]."""
    if not 0.0 < phi <= 0.25:
        raise PreconditionError(f"phi must lie in (0, 1/4], got {phi}")
    w, v = np.linalg.eig(np.asarray(unitary, dtype=complex))
    phases = np.angle(w)
    if np.any(np.abs(phases) > 1.0 + 1e-9):
        raise PreconditionError("eigenphases must lie in [-1, 1]")
    base = unit_cost if unit_cost is not None else CostLedger.single("U")
    rounds = (1.0 / phi) * max(1.0, math.log2(1.0 / eps))
    return GPETransform(
        phi=phi, eps=eps, eigenphases=phases, eigenvectors=v, ledger=base.scaled(rounds)
    )


# -- amplitude estimation -----------------------------------------------------


@lru_cache(maxsize=4096)
def _ae_distribution(theta: float, m_ae: int) -> tuple:
    """Canonical AE outcome distribution over y in [0, M) for angle theta."""
    y = np.arange(m_ae)
    omega = theta / math.pi

    def kernel(delta):
        delta = np.mod(delta + 0.5, 1.0) - 0.5
        tiny = np.abs(delta) < 1e-14
        num = np.sin(np.pi * m_ae * delta) ** 2
        den = (m_ae * np.sin(np.pi * delta)) ** 2
        return np.where(tiny, 1.0, num / np.where(tiny, 1.0, den))

    p = 0.5 * (kernel(y / m_ae - omega) + kernel(y / m_ae + omega))
    p = p / p.sum()
    return tuple(p)


def ae_sample_estimates(amplitude: float, m_ae: int, reps: int, rng) -> np.ndarray:
    """Sample `reps` raw AE estimates sin(pi y / M) from the exact distribution."""
    theta = math.asin(min(max(amplitude, 0.0), 1.0))
    p = np.array(_ae_distribution(round(theta, 14), m_ae))
    ys = rng.choice(m_ae, size=reps, p=p)
    return np.sin(np.pi * ys / m_ae)


def _boost_reps(delta: float) -> int:
    return 2 * int(math.ceil(18.0 * math.log(1.0 / min(delta, 0.5)))) + 1


@dataclass(frozen=True)
class AmplitudeEstimate:
    estimate: float
    verdict: str  # "below" or "above" the 2^-resolution threshold
    threshold: float
    ledger: CostLedger


def amplitude_estimate(
    amplitude: float,
    resolution: int,
    delta: float,
    rng,
    circuit: CostLedger | None = None,
) -> AmplitudeEstimate:
    """Boosted AE threshold verdict: reports amplitude < 2^-j or >= 2^-j.

    Correct with probability at least 1 - delta (sampling simulated from the
    exact outcome distribution); the ledger charges O(2^j (T+k) log(1/delta)).
    """
    m_ae = 1 << (resolution + 3)
    reps = _boost_reps(delta)
    med = float(np.median(ae_sample_estimates(amplitude, m_ae, reps, rng)))
    threshold = 2.0**-resolution
    base = circuit if circuit is not None else CostLedger.single("A")
    ledger = base.scaled((1 << resolution) * max(1.0, math.log2(1.0 / delta)))
    verdict = "below" if med < threshold else "above"
    return AmplitudeEstimate(estimate=med, verdict=verdict, threshold=threshold, ledger=ledger)


def ae_multiplicative(
    amplitude: float, rel: float, delta: float, rng, circuit: CostLedger | None = None
) -> tuple[float, CostLedger]:
    """Median-boosted AE estimate within (1 +/- rel) of `amplitude` w.p. >= 1-delta."""
    if amplitude <= 0:
        raise PreconditionError("multiplicative estimation needs a positive amplitude")
    m_ae = 1 << max(3, math.ceil(math.log2(2.0 * math.pi / (rel * amplitude))))
    reps = _boost_reps(delta)
    est = float(np.median(ae_sample_estimates(amplitude, m_ae, reps, rng)))
    base = circuit if circuit is not None else CostLedger.single("A")
    return est, base.scaled(m_ae * max(1.0, math.log2(1.0 / delta)))


# -- variable-stopping-time algorithms ---------------------------------------

SegmentFn = Callable[[int, Any], list[tuple[bool, str, complex]]]


@dataclass(frozen=True)
class VSTA:
    """Ordered segments with stopping times and an initial label distribution.

    segments[j-1](j, label) maps a still-running branch to a list of
    (stopped, flag, relative amplitude) outcomes; stopped branches receive
    clock value j and are never touched again.  Whatever is still running
    after the last segment is terminated as stopped-bad at t_m, so the total
    stopping probability is 1.
    """

    times: tuple[float, ...]
    segments: tuple[SegmentFn, ...]
    initial: dict[Any, complex]
    name: str = "vsta"

    def __post_init__(self):
        if len(self.times) != len(self.segments) or not self.times:
            raise PreconditionError("need one stopping time per segment")
        if self.times[0] <= 0 or any(
            b <= a for a, b in zip(self.times, self.times[1:])
        ):
            raise PreconditionError("stopping times must be strictly increasing, t_1 > 0")
        total = sum(abs(a) ** 2 for a in self.initial.values())
        if abs(total - 1.0) > 1e-9:
            raise PreconditionError(f"initial amplitudes must be normalized, got {total}")

    @property
    def stages(self) -> int:
        return len(self.times)


BranchState = dict[tuple[int, str, Any], complex]


def _initial_state(vsta: VSTA) -> BranchState:
    return {(0, FLAG_NEUTRAL, label): amp for label, amp in vsta.initial.items()}


def _apply_segment(state: BranchState, stage: int, seg: SegmentFn) -> BranchState:
    out: BranchState = defaultdict(complex)
    for (clock, flag, label), amp in state.items():
        if clock != 0:
            out[(clock, flag, label)] += amp
            continue
        for stopped, new_flag, rel in seg(stage, label):
            if stopped:
                out[(stage, new_flag, label)] += amp * rel
            else:
                out[(0, FLAG_NEUTRAL, label)] += amp * rel
    return dict(out)


def _terminate(state: BranchState, stage: int) -> BranchState:
    out: BranchState = defaultdict(complex)
    for (clock, flag, label), amp in state.items():
        if clock == 0:
            out[(stage, FLAG_BAD, label)] += amp
        else:
            out[(clock, flag, label)] += amp
    return dict(out)


def _mg_norm(state: BranchState) -> float:
    return math.sqrt(sum(abs(a) ** 2 for (c, f, l), a in state.items() if f != FLAG_BAD))


def _scale_classes(state: BranchState, s: float, c: float) -> BranchState:
    return {
        key: amp * (c if key[1] == FLAG_BAD else s) for key, amp in state.items()
    }


@dataclass(frozen=True)
class StoppingProfile:
    """Exact stopping-time statistics of an unamplified run."""

    times: tuple[float, ...]
    p_stop_at: tuple[float, ...]
    p_maybe_good: tuple[float, ...]
    p_succ: float
    t_norm2: float

    def to_dict(self) -> dict:
        return {
            "times": list(self.times),
            "p_stop_at": list(self.p_stop_at),
            "p_maybe_good": list(self.p_maybe_good),
            "p_succ": self.p_succ,
            "t_norm2": self.t_norm2,
        }


def run_unamplified(vsta: VSTA) -> BranchState:
    state = _initial_state(vsta)
    for j, seg in enumerate(vsta.segments, start=1):
        state = _apply_segment(state, j, seg)
    return _terminate(state, vsta.stages)


def stopping_profile(vsta: VSTA) -> StoppingProfile:
    state = _initial_state(vsta)
    p_mg = []
    for j, seg in enumerate(vsta.segments, start=1):
        state = _apply_segment(state, j, seg)
        if j == vsta.stages:
            state = _terminate(state, j)
        p_mg.append(_mg_norm(state) ** 2)
    p_stop = [0.0] * vsta.stages
    for (clock, flag, label), amp in state.items():
        if clock > 0:
            p_stop[clock - 1] += abs(amp) ** 2
    t_norm2 = math.sqrt(sum(t * t * p for t, p in zip(vsta.times, p_stop)))
    return StoppingProfile(
        times=vsta.times,
        p_stop_at=tuple(p_stop),
        p_maybe_good=tuple(p_mg),
        p_succ=p_mg[-1],
        t_norm2=t_norm2,
    )


def sparsify_profile(profile: StoppingProfile) -> StoppingProfile:
    """Merge stopping times into dyadic buckets t_1 2^j, at most 1 + log(T_max/t_1) stages.

    Each stopping time moves up to the next bucket boundary, so the averaged
    stopping time ||T||_2 grows by at most a factor of 2.
    """
    t1 = profile.times[0]
    buckets: dict[int, float] = defaultdict(float)
    for t, p in zip(profile.times, profile.p_stop_at):
        j = max(0, math.ceil(math.log2(t / t1))) if t > t1 else 0
        buckets[j] += p
    times = tuple(t1 * 2.0**j for j in sorted(buckets))
    p_stop = tuple(buckets[j] for j in sorted(buckets))
    t_norm2 = math.sqrt(sum(t * t * p for t, p in zip(times, p_stop)))
    return StoppingProfile(
        times=times,
        p_stop_at=p_stop,
        p_maybe_good=(profile.p_succ,) * len(times),
        p_succ=profile.p_succ,
        t_norm2=t_norm2,
    )


@dataclass(frozen=True)
class StageRecord:
    stage: int
    target: float
    amplitude_before: float
    amplitude_after: float
    k: int
    q: float  # query multiplier 2k+1
    a: float  # amplification achieved
    o: float  # overhead q/a


@dataclass(frozen=True)
class AmplificationSchedule:
    stages: tuple[StageRecord, ...]
    e_bound: float  # measured E
    g_bound: float
    o_bound: float  # measured product of overheads

    def to_dict(self) -> dict:
        return {
            "stages": [vars(s) for s in self.stages],
            "E": self.e_bound,
            "G": self.g_bound,
            "O": self.o_bound,
        }


def stage_target(j: int, m: int) -> float:
    """Theta(max[1/sqrt(m), 1/(sqrt(m-j+1)(1+ln(m-j+1)))]) with constants (1/2, 1)."""
    r = m - j + 1
    return min(1.0, max(1.0 / math.sqrt(m), 1.0 / (math.sqrt(r) * (1.0 + math.log(r)))))


def _choose_k(amplitude: float, target: float) -> int:
    """Largest k not overamplifying with sin((2k+1)theta) <= target, nudged up
    if the landing point falls below half the target."""
    if amplitude >= target or amplitude <= 0.0:
        return 0
    theta = math.asin(min(1.0, amplitude))
    k_max = max(0, math.floor((math.pi / (2.0 * theta) - 1.0) / 2.0))
    k = 0
    for cand in range(k_max + 1):
        if aa_amplitude(amplitude, cand) <= target:
            k = cand
        else:
            break
    if aa_amplitude(amplitude, k) < target / 2.0 and k < k_max:
        k += 1
    return k


@dataclass(frozen=True)
class VTAAResult:
    """Amplified algorithm output: final branch state plus cost accounting."""

    vsta: VSTA
    profile: StoppingProfile
    schedule: AmplificationSchedule
    final_state: BranchState
    final_unamplified: BranchState
    stage_uses: tuple[float, ...]
    run_time: float  # total time-unit cost of the amplified algorithm
    build_time: float

    def good_label_amplitudes(self, state: BranchState | None = None) -> dict[Any, complex]:
        """Per-label norm of the good-flagged component, phase from the largest branch."""
        state = self.final_state if state is None else state
        acc: dict[Any, float] = defaultdict(float)
        lead: dict[Any, complex] = {}
        for (clock, flag, label), amp in state.items():
            if flag != FLAG_GOOD:
                continue
            acc[label] += abs(amp) ** 2
            if label not in lead or abs(amp) > abs(lead[label]):
                lead[label] = amp
        return {
            label: (lead[label] / abs(lead[label])) * math.sqrt(val)
            for label, val in acc.items()
            if val > 0
        }

    def good_norm(self) -> float:
        return math.sqrt(
            sum(abs(a) ** 2 for (c, f, l), a in self.final_state.items() if f == FLAG_GOOD)
        )


def build_vtaa(
    vsta: VSTA, p_succ_lower: float = 0.0, delta: float = 1e-2
) -> VTAAResult:
    """Variable-time amplitude amplification with the staged-target schedule.

    Stage j is amplified to the profile target; good components scale
    uniformly, so the good-flagged part of the output is exactly proportional
    to the unamplified one.  The schedule is deterministic given the measured
    amplitudes; `delta` only enters the construction-cost ledger, charging the
    amplitude estimations the constructive theorem performs.
    """
    profile = stopping_profile(vsta)
    if profile.p_succ < p_succ_lower * (1.0 - 1e-9):
        raise PreconditionError(
            f"success probability {profile.p_succ} below stated bound {p_succ_lower}"
        )
    m = vsta.stages
    state = _initial_state(vsta)
    records = []
    for j, seg in enumerate(vsta.segments, start=1):
        state = _apply_segment(state, j, seg)
        if j == m:
            state = _terminate(state, j)
        before = _mg_norm(state)
        target = stage_target(j, m)
        k = _choose_k(before, target)
        if k > 0:
            theta = math.asin(min(1.0, before))
            s = math.sin((2 * k + 1) * theta) / max(math.sin(theta), 1e-300)
            cos_theta = math.cos(theta)
            c = math.cos((2 * k + 1) * theta) / cos_theta if cos_theta > 1e-15 else 0.0
            state = _scale_classes(state, s, c)
        after = _mg_norm(state)
        gain = after / before if before > 0 else 1.0
        records.append(
            StageRecord(
                stage=j,
                target=target,
                amplitude_before=before,
                amplitude_after=after,
                k=k,
                q=2.0 * k + 1.0,
                a=gain,
                o=(2.0 * k + 1.0) / gain if gain > 0 else 2.0 * k + 1.0,
            )
        )
    # exact usage counts: A'_m uses segment j prod_{i>=j} q_i times
    q = [r.q for r in records]
    uses = []
    acc = 1.0
    for qj in reversed(q):
        acc *= qj
        uses.append(acc)
    uses.reverse()
    durations = [vsta.times[0]] + [
        b - a for a, b in zip(vsta.times, vsta.times[1:])
    ]
    run_time = sum(u * d for u, d in zip(uses, durations))
    amp_after = [1.0] + [r.amplitude_after for r in records]
    e_bound = max(amp_after[-1] / max(amp_after[j - 1], 1e-300) for j in range(1, m + 1))
    o_bound = float(np.prod([r.o for r in records]))
    t_prime = 2.0 * vsta.times[-1] / vsta.times[0]
    build_time = run_time * max(1.0, math.log2(t_prime)) * max(
        1.0, math.log2(max(2.0, math.log2(max(t_prime, 2.0)) / delta))
    )
    return VTAAResult(
        vsta=vsta,
        profile=profile,
        schedule=AmplificationSchedule(
            stages=tuple(records), e_bound=e_bound, g_bound=1.0, o_bound=o_bound
        ),
        final_state=state,
        final_unamplified=run_unamplified(vsta),
        stage_uses=tuple(uses),
        run_time=run_time,
        build_time=build_time,
    )


def corollary_time_bound(result: VTAAResult) -> float:
    """E O (T_max + (t_1 + ||T||_2 sqrt(ln(T_max/t_1))) / sqrt(p_succ))."""
    profile = result.profile
    t1, tmax = profile.times[0], profile.times[-1]
    i_bound = t1 + profile.t_norm2 * math.sqrt(max(0.0, math.log(tmax / t1)))
    return (
        result.schedule.e_bound
        * result.schedule.o_bound
        * (tmax + i_bound / math.sqrt(max(profile.p_succ, 1e-300)))
    )


@dataclass(frozen=True)
class MindfulResult:
    """Amplified algorithm plus a multiplicative estimate of the total gain."""

    vtaa: VTAAResult
    gamma: float
    true_ratio: float
    estimation_time: float


def mindful_amplify(
    vsta: VSTA,
    eps: float,
    delta: float,
    rng,
    p_succ_lower: float = 0.0,
) -> MindfulResult:
    """Amplify to Theta(1) final amplitude while estimating the gain Gamma.

    Gamma is the product of per-stage ratio estimates, each obtained from two
    amplitude estimations at relative precision eps/(5m), so that
    ||Pi A' 0>|| / (Gamma ||Pi A 0>||) lies in [1-eps, 1+eps] with probability
    at least 1 - delta.
    """
    result = build_vtaa(vsta, p_succ_lower=p_succ_lower, delta=delta)
    m = vsta.stages
    rel = eps / (5.0 * m)
    d_each = delta / (2.0 * m)
    gamma = 1.0
    est_time = 0.0
    for rec in result.schedule.stages:
        if rec.amplitude_before <= 0 or rec.amplitude_after <= 0:
            continue
        num, led1 = ae_multiplicative(rec.amplitude_after, rel, d_each, rng)
        den, led2 = ae_multiplicative(rec.amplitude_before, rel, d_each, rng)
        gamma *= num / den
        est_time += led1.total_queries() + led2.total_queries()
    true_ratio = float(np.prod([r.a for r in result.schedule.stages]))
    return MindfulResult(
        vtaa=result, gamma=gamma, true_ratio=true_ratio, estimation_time=est_time
    )


def two_stage_toy(
    p_stop_bad_1: float,
    p_good_2: float,
    t1: float = 1.0,
    t2: float = 4.0,
    p_good_1: float = 0.0,
) -> VSTA:
    """Two-stage toy: stage 1 stops bad (and optionally good) mass, stage 2 splits the rest."""

    def seg1(stage, label):
        keep = math.sqrt(max(0.0, 1.0 - p_stop_bad_1 - p_good_1))
        return [
            (True, FLAG_BAD, math.sqrt(p_stop_bad_1)),
            (True, FLAG_GOOD, math.sqrt(p_good_1)),
            (False, FLAG_NEUTRAL, keep),
        ]

    def seg2(stage, label):
        rest = max(0.0, 1.0 - p_stop_bad_1 - p_good_1)
        if rest <= 0:
            return [(True, FLAG_BAD, 1.0)]
        frac_good = p_good_2 / rest
        if frac_good > 1.0:
            raise PreconditionError("p_good_2 exceeds the surviving mass")
        return [
            (True, FLAG_GOOD, math.sqrt(frac_good)),
            (True, FLAG_BAD, math.sqrt(max(0.0, 1.0 - frac_good))),
        ]

    return VSTA(times=(t1, t2), segments=(seg1, seg2), initial={0: 1.0}, name="two-stage-toy")
