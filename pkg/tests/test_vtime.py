import math

import numpy as np
import pytest

from blockenc import vtime as vt
from blockenc.errors import PreconditionError


def test_aa_amplitude_examples():
    assert abs(vt.aa_amplitude(0.5, 1) - 1.0) < 1e-12
    assert abs(vt.aa_amplitude(0.1, 2) - math.sin(5 * math.asin(0.1))) < 1e-15
    assert vt.aa_amplitude(0.3, 0) == pytest.approx(0.3)


def test_aa_lower_bound_example():
    amp = vt.aa_amplitude(0.1, 2)
    assert amp >= vt.aa_lower_bound(0.1, 2)
    assert amp == pytest.approx(math.sin(5 * math.asin(0.1)), abs=1e-12)
    assert amp >= math.sqrt(1 - 25 * 0.01 / 3) * 0.5


def test_aa_amplify_state_form():
    rng = np.random.default_rng(0)
    psi = rng.normal(size=4) + 1j * rng.normal(size=4)
    psi /= np.linalg.norm(psi)
    proj = np.zeros((4, 4))
    proj[0, 0] = proj[1, 1] = 1.0
    alpha = np.linalg.norm(proj @ psi)
    for k in range(3):
        out = vt.aa_amplify(psi, proj, k)
        assert abs(np.linalg.norm(proj @ out) - abs(vt.aa_amplitude(min(alpha, 1.0), k))) < 1e-12
        # relative structure within the projector is preserved
        ratio = (proj @ out)[0] / (proj @ psi)[0]
        assert np.allclose(proj @ out, ratio * (proj @ psi))


def test_aa_exact_algebra_grid():
    rng = np.random.default_rng(1)
    for _ in range(200):
        alpha = rng.uniform(0.01, 0.99)
        k = int(rng.integers(0, 6))
        if (2 * k + 1) * math.asin(alpha) > math.pi / 2:
            continue
        psi = np.array([alpha, math.sqrt(1 - alpha**2)])
        proj = np.diag([1.0, 0.0])
        out = vt.aa_amplify(psi, proj, k)
        assert abs(out[0] - vt.aa_amplitude(alpha, k)) < 1e-12


def test_ratio_check_small_angle_limit():
    ratio, bound = vt.amplification_ratio_check(1e-6, 3)
    assert ratio == pytest.approx(1.0, abs=1e-9)
    assert ratio <= bound


def test_ratio_check_example():
    ratio, bound = vt.amplification_ratio_check(0.3, 1)
    assert ratio == pytest.approx(3 * 0.3 / math.sin(3 * math.asin(0.3)), abs=1e-12)
    assert ratio <= 1 + 1.5 * math.sin(3 * math.asin(0.3)) ** 2
    assert ratio <= bound


def test_ratio_check_boundary():
    # (2k+1) arcsin(alpha) = pi/2 exactly: ratio bounded by 1 + 3/2
    alpha = math.sin(math.pi / 6)
    ratio, bound = vt.amplification_ratio_check(alpha, 1)
    assert bound == pytest.approx(2.5)
    assert ratio <= 2.5


def test_ratio_check_grid():
    for alpha in np.linspace(0.02, 0.9, 25):
        kmax = int((math.pi / (2 * math.asin(alpha)) - 1) / 2)
        for k in range(kmax + 1):
            ratio, bound = vt.amplification_ratio_check(float(alpha), k)
            assert ratio <= bound + 1e-12


def test_ratio_check_overamplification_rejected():
    with pytest.raises(PreconditionError):
        vt.amplification_ratio_check(0.9, 3)


def test_gpe_contract_examples():
    for eps in (1e-2, 1e-4):
        a0, a1 = vt.gpe_split(0.05, 0.1, eps)
        assert a1 <= eps
        a0, a1 = vt.gpe_split(0.3, 0.1, eps)
        assert a0 <= eps
        a0, a1 = vt.gpe_split(0.15, 0.1, eps)  # in the gap: any split accepted
        assert abs(a0**2 + a1**2 - 1.0) < 1e-12


def test_gpe_contract_sweep():
    eps = 1e-3
    for phi in (0.25, 0.1, 2.0**-5):
        for lam in np.linspace(0.0, phi, 7):
            assert vt.gpe_split(float(lam), phi, eps)[1] <= eps
            assert vt.gpe_split(float(-lam), phi, eps)[1] <= eps
        for lam in np.linspace(2 * phi, 1.0, 7):
            assert vt.gpe_split(float(lam), phi, eps)[0] <= eps


def test_gpe_transform_on_unitary():
    u = np.diag(np.exp(1j * np.array([0.05, 0.3])))
    tr = vt.gapped_phase_estimation(u, 0.1, 1e-3)
    splits = dict((round(lam, 3), (a0, a1)) for lam, a0, a1 in tr.branch_amplitudes())
    assert splits[0.05][1] <= 1e-3
    assert splits[0.3][0] <= 1e-3
    with pytest.raises(PreconditionError):
        vt.gapped_phase_estimation(u, 0.3, 1e-3)


def test_amplitude_estimate_zero():
    rng = np.random.default_rng(2)
    for j in (1, 3, 5):
        res = vt.amplitude_estimate(0.0, j, 0.05, rng)
        assert res.verdict == "below"


def test_amplitude_estimate_constant_precision():
    # true amplitude 0.5: multiplicative estimate lands in [0.25, 1] w.p. >= 1 - delta
    rng = np.random.default_rng(3)
    fails = 0
    for _ in range(1000):
        est, _ = vt.ae_multiplicative(0.5, 0.5, 0.05, rng)
        if not 0.25 <= est <= 1.0:
            fails += 1
    assert fails / 1000 <= 0.05


def test_amplitude_estimate_ledger_doubles_per_bit():
    rng = np.random.default_rng(4)
    r3 = vt.amplitude_estimate(0.3, 3, 0.1, rng)
    r4 = vt.amplitude_estimate(0.3, 4, 0.1, rng)
    assert r4.ledger.total_queries() == pytest.approx(2 * r3.ledger.total_queries())


def test_stopping_profile_single_stage():
    single = vt.VSTA(times=(2.0,), segments=((lambda j, l: [(True, vt.FLAG_GOOD, 1.0)]),),
                     initial={0: 1.0})
    prof = vt.stopping_profile(single)
    assert prof.p_succ == pytest.approx(1.0)
    assert prof.t_norm2 == pytest.approx(2.0)


def test_stopping_profile_two_stage():
    toy = vt.two_stage_toy(0.3, 0.04)
    prof = vt.stopping_profile(toy)
    assert prof.p_stop_at == pytest.approx((0.3, 0.7))
    assert prof.p_succ == pytest.approx(0.04)
    # ||T||_2^2 = sum p_j t_j^2
    assert prof.t_norm2**2 == pytest.approx(0.3 * 1.0 + 0.7 * 16.0)


def test_vsta_validation():
    with pytest.raises(PreconditionError):
        vt.VSTA(times=(2.0, 1.0), segments=(None, None), initial={0: 1.0})
    with pytest.raises(PreconditionError):
        vt.VSTA(times=(1.0,), segments=((lambda j, l: []),), initial={0: 2.0})


def test_build_vtaa_theta1_input():
    # success already Theta(1): no amplification steps scheduled
    single = vt.VSTA(times=(1.0,), segments=((lambda j, l: [(True, vt.FLAG_GOOD, 1.0)]),),
                     initial={0: 1.0})
    res = vt.build_vtaa(single)
    assert all(rec.k == 0 for rec in res.schedule.stages)
    assert res.run_time == pytest.approx(1.0)


def test_build_vtaa_success_bound():
    toy = vt.two_stage_toy(0.3, 0.04)
    with pytest.raises(PreconditionError):
        vt.build_vtaa(toy, p_succ_lower=0.5)


def test_vtaa_proportionality():
    for p1, pg in [(0.3, 0.04), (0.6, 0.01), (0.1, 0.25)]:
        res = vt.build_vtaa(vt.two_stage_toy(p1, pg))
        amp = res.good_label_amplitudes()
        un = res.good_label_amplitudes(res.final_unamplified)
        ratios = [amp[k] / un[k] for k in un]
        assert np.allclose(ratios, ratios[0], rtol=1e-9)
        fid = abs(sum(np.conj(un[k] / np.linalg.norm(list(un.values()))) * amp[k]
                      for k in un)) / np.linalg.norm(list(amp.values()))
        assert fid >= 1 - 1e-9


def test_vtaa_cheap_early_stop():
    # most mass stops bad at t_1: cost stays below the naive t_m / sqrt(p_succ)
    toy = vt.two_stage_toy(0.95, 0.01, t1=1.0, t2=50.0)
    res = vt.build_vtaa(toy)
    naive = 50.0 / math.sqrt(0.01)
    assert res.run_time <= naive
    assert res.run_time <= vt.corollary_time_bound(res)


def test_vtaa_stage_targets():
    toy = vt.two_stage_toy(0.3, 0.01, t1=1.0, t2=4.0)
    res = vt.build_vtaa(toy)
    for rec in res.schedule.stages:
        target = vt.stage_target(rec.stage, 2)
        assert rec.target == pytest.approx(target)
        # landed in [target/2, 1] (or started above target with k = 0)
        if rec.k > 0:
            assert rec.amplitude_after >= target / 2 - 1e-12


def test_vtaa_ledger_bound_suite():
    rng = np.random.default_rng(5)
    for _ in range(20):
        p1 = float(rng.uniform(0.05, 0.9))
        pg = float(rng.uniform(0.005, (1 - p1) * 0.9))
        t2 = float(rng.uniform(2.0, 40.0))
        res = vt.build_vtaa(vt.two_stage_toy(p1, pg, t1=1.0, t2=t2))
        assert res.run_time <= vt.corollary_time_bound(res) * (1 + 1e-9)


def test_overhead_product_exp3c_bound():
    # Lemma 12 chain: prod o_j <= exp(sum 3/2 amp_j^2) <= exp(3 C)
    for p1, pg in [(0.3, 0.04), (0.5, 0.02), (0.7, 0.1)]:
        res = vt.build_vtaa(vt.two_stage_toy(p1, pg))
        m = 2
        c_const = 0.0
        exponent = 0.0
        for rec in res.schedule.stages:
            amp_sq = rec.amplitude_after**2
            exponent += 1.5 * amp_sq
            profile = max(1.0 / m, 1.0 / ((m - rec.stage + 1) *
                          (1 + math.log(m - rec.stage + 1)) ** 2))
            c_const = max(c_const, 1.5 * amp_sq / profile)
        assert res.schedule.o_bound <= math.exp(exponent) + 1e-9
        assert res.schedule.o_bound <= math.exp(3.0 * c_const) + 1e-9


def test_sparsify_profile():
    times = tuple(float(t) for t in (1.0, 1.5, 2.5, 3.0, 7.0, 30.0))
    p_stop = (0.1, 0.2, 0.25, 0.15, 0.2, 0.1)
    prof = vt.StoppingProfile(times=times, p_stop_at=p_stop,
                              p_maybe_good=(1.0,) * 6, p_succ=0.3,
                              t_norm2=math.sqrt(sum(t * t * p for t, p in zip(times, p_stop))))
    sparse = vt.sparsify_profile(prof)
    assert len(sparse.times) <= 1 + math.ceil(math.log2(30.0 / 1.0)) + 1
    assert sparse.t_norm2 <= 2.0 * prof.t_norm2
    assert sum(sparse.p_stop_at) == pytest.approx(1.0)


def test_mindful_single_stage():
    single = vt.VSTA(times=(1.0,), segments=((lambda j, l: [(True, vt.FLAG_GOOD, 1.0)]),),
                     initial={0: 1.0})
    rng = np.random.default_rng(6)
    res = vt.mindful_amplify(single, 0.1, 0.1, rng)
    assert 0.9 <= res.gamma / res.true_ratio <= 1.1


def test_mindful_telescoping_identity():
    res = vt.build_vtaa(vt.two_stage_toy(0.3, 0.04))
    prod = np.prod([r.a for r in res.schedule.stages])
    final = res.schedule.stages[-1].amplitude_after
    assert prod == pytest.approx(final / math.sqrt(res.profile.p_succ))


def test_mindful_two_stage_contract():
    fails = 0
    runs = 300
    for seed in range(runs):
        rng = np.random.default_rng(seed)
        res = vt.mindful_amplify(vt.two_stage_toy(0.3, 0.04), 0.1, 0.1, rng)
        final = res.vtaa.schedule.stages[-1].amplitude_after
        ratio = final / (res.gamma * math.sqrt(res.vtaa.profile.p_succ))
        if not 0.9 <= ratio <= 1.1:
            fails += 1
        assert final >= 0.5  # amplified to Theta(1)
    assert fails / runs <= 0.1
