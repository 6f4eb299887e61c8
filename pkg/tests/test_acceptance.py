"""Acceptance criteria, each run at its stated tolerance.

Every test prints one ``[PASS]``/``[FAIL]`` line (also repeated in the
terminal summary) and asserts the same condition. Stated runtime limits are
part of each verdict.
"""
import math
import time

import numpy as np
import pytest
from scipy.integrate import trapezoid

from hybridsea import eigen
from hybridsea.duffing import DuffingParams, extract_delta, solve_high_fidelity
from hybridsea.experiments import (ExperimentPlan, duffing_baseline_cell, duffing_hs_cell,
                                   median_jsd, run_study)
from hybridsea.integrator import PITCH_GUARD, euler_transform
from hybridsea.metrics import Pdf, jsd
from hybridsea.network import init_params, loss_and_grad
from hybridsea.vessel import assemble_vessel, decay_test
from hybridsea.waves import SpectrumSpec, WaveRealization, eval_spectrum, sample_realization

pytestmark = pytest.mark.acceptance


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0


def harmonic_amplitude(t, x, omega):
    """Least-squares amplitude of ``a cos(wt) + b sin(wt)`` fitted to ``x``."""
    basis = np.column_stack([np.cos(omega * t), np.sin(omega * t)])
    (a, b), *_ = np.linalg.lstsq(basis, x, rcond=None)
    return math.hypot(a, b)


def test_c01_spectrum_closure(verdict):
    with Timer() as tm:
        w = np.linspace(1e-6, 40.0, 800_001)
        errs = {hs: trapezoid(eval_spectrum(SpectrumSpec.bretschneider(hs, 1.0), w), w) / (hs**2 / 3) - 1
                for hs in (0.5, 1.0, 2.0)}
    worst = max(abs(e) for e in errs.values())
    ok = worst < 5e-3 and tm.elapsed < 1.0
    assert verdict(1, ok, f"max |m0/(Hs^2/3) - 1| = {worst:.2e} (< 5e-3), {tm.elapsed:.2f} s (< 1 s)")


def test_c02_linear_response_oracle(verdict):
    p = DuffingParams(c3=0.0, b2=0.0, alpha=0.0)
    zeta = 0.1
    rel = {}
    with Timer() as tm:
        for omega in (0.5, 1.0, 2.0):
            traj = solve_high_fidelity(p, WaveRealization.single(omega, zeta), 400.0, 0.05)
            tail = traj.t >= 300.0
            got = harmonic_amplitude(traj.t[tail], traj.z[tail], omega)
            exact = p.beta * zeta / math.hypot(p.c1 - p.m * omega**2, p.b1 * omega)
            rel[omega] = got / exact - 1
    worst = max(abs(e) for e in rel.values())
    ok = worst < 0.01 and tm.elapsed < 10.0
    detail = ", ".join(f"w={w:g}: {e:+.2e}" for w, e in rel.items())
    assert verdict(2, ok, f"amplitude rel. error {detail} (< 1%), {tm.elapsed:.1f} s (< 10 s)")


def test_c03_bdf2_order(verdict):
    p = DuffingParams(c3=0.0, b2=0.0, alpha=0.0)
    omega, zeta = 0.8, 0.1
    H = p.beta * zeta / complex(p.c1 - p.m * omega**2, p.b1 * omega)
    errs = []
    with Timer() as tm:
        for dt in (0.1, 0.05):
            traj = solve_high_fidelity(p, WaveRealization.single(omega, zeta), 400.0, dt)
            tail = traj.t >= 350.0
            exact = (H * np.exp(1j * omega * traj.t[tail])).real
            errs.append(np.sqrt(np.mean((traj.z[tail] - exact) ** 2)))
    ratio = errs[0] / errs[1]
    ok = 3.4 <= ratio <= 4.6 and tm.elapsed < 30.0
    assert verdict(3, ok, f"L2 error ratio dt 0.1 -> 0.05 = {ratio:.3f} (in [3.4, 4.6]), "
                          f"{tm.elapsed:.1f} s (< 30 s)")


def test_c04_delta_cancellation(verdict):
    p = DuffingParams()
    with Timer() as tm:
        waves = sample_realization(SpectrumSpec.bretschneider(1.0, 1.0), 500.0, 4)
        traj = solve_high_fidelity(p, waves, 500.0, 0.1)
        d = extract_delta("A", p, traj, waves)
    resid = np.abs(d + p.c3 * traj.z**3).max() / np.abs(d).max()
    ok = resid < 1e-6 and tm.elapsed < 30.0
    assert verdict(4, ok, f"max|delta + c3 z^3| / max|delta| = {resid:.2e} (< 1e-6), "
                          f"{tm.elapsed:.1f} s (< 30 s)")


def test_c05_training_size_convergence(verdict):
    plan = ExperimentPlan.from_dict({
        "study": "duffing-trainsize", "models": ["A"], "budgets": [10, 50, 100],
        "train_seeds": [1, 2, 3], "test_seeds": [1001],
    })
    with Timer() as tm:
        rows = run_study(plan, write=False)
    j = {b: median_jsd(rows, model_id="A", n_zuc=b) for b in plan.budgets}
    change = abs(j[50] - j[100]) / j[100]
    factor = j[10] / j[100]
    ok = change < 0.25 and factor > 2.0 and tm.elapsed < 900.0
    assert verdict(5, ok, f"median JSD N10/N50/N100 = {j[10]:.2e}/{j[50]:.2e}/{j[100]:.2e}; "
                          f"|J50-J100|/J100 = {change:.2f} (< 0.25), J10/J100 = {factor:.1f} (> 2), "
                          f"{tm.elapsed:.0f} s (< 900 s)")


@pytest.fixture(scope="module")
def hs_sweep():
    plan = ExperimentPlan.from_dict({"study": "duffing-hs-sweep", "models": ["A", "E"]})
    t0 = time.perf_counter()
    results = [duffing_hs_cell(plan, m, s, export=True) for m in plan.models for s in plan.train_seeds]
    results.append(duffing_baseline_cell(plan, export=True))
    elapsed = time.perf_counter() - t0
    rows = [r for res in results for r in res["rows"]]
    trajs = {k: v for res in results for k, v in res["trajectories"].items()}
    return plan, rows, trajs, elapsed


def test_c06_generalizability_ordering(hs_sweep, verdict):
    plan, rows, _, elapsed = hs_sweep
    parts, ok = [], elapsed < 1800.0
    for cond in plan.test_conditions:
        a, e = (median_jsd(rows, model_id=m, Hs=cond.hs) for m in ("A", "E"))
        lin = median_jsd(rows, model_id="linear", Hs=cond.hs)
        good = a <= e and (cond.hs < 1.0 or a <= lin)
        ok &= good
        parts.append(f"Hs={cond.hs:g} A/E/lin={a:.2e}/{e:.2e}/{lin:.2e}{'' if good else ' X'}")
    assert verdict(6, ok, "; ".join(parts) + f"; {elapsed:.0f} s (< 1800 s)")


def test_c07_linear_limit(hs_sweep, verdict):
    plan, _, trajs, _ = hs_sweep
    lin = trajs["hs0.01_test1001_linear"]
    w = lin.window_mask(plan.transient_cutoff)
    rms = np.sqrt(np.mean(lin.z[w] ** 2))
    rel = []
    for s in plan.train_seeds:
        hyb = trajs[f"A_seed{s}_hs0.01_test1001_hybrid_A"]
        rel.append(np.sqrt(np.mean((hyb.z[w] - lin.z[w]) ** 2)) / rms)
    med = float(np.median(rel))
    ok = med < 0.05
    assert verdict(7, ok, f"relative L2 of hybrid A vs linear at Hs=0.01 = {med:.3f} median "
                          f"(seeds {', '.join(f'{r:.3f}' for r in rel)}) (< 0.05)")


def test_c08_eigenvalue_oracle(verdict):
    rng = np.random.default_rng(8)
    worst = 0.0
    with Timer() as tm:
        for _ in range(100):
            m, c1, b1, a1 = rng.uniform(0.1, 10.0, 4)
            p = DuffingParams(m=m, c1=c1, b1=b1)
            for model in "ABCDE":
                rep = eigen.eigenvalues(model, p, a1)
                roots = sorted(eigen.quadratic_roots(model, p, a1), key=lambda z: (-z.imag, -z.real))
                worst = max(worst, abs(rep.lambda1 - roots[0]), abs(rep.lambda2 - roots[1]))
        p = DuffingParams()
        centers = [eigen.eigenvalues(m, p, 0.5) for m in "CD"]
        wn = math.sqrt(p.c1 / (p.m + 0.5))
        center_err = max(max(abs(r.lambda1 - 1j * wn), abs(r.lambda2 + 1j * wn)) for r in centers)
        e = eigen.eigenvalues("E", p)
    structure = (center_err < 1e-12 and all(r.classification is eigen.FixedPoint.CENTER for r in centers)
                 and e.lambda1 == 0 and e.lambda2 == 0)
    ok = worst < 1e-10 and structure and tm.elapsed < 1.0
    assert verdict(8, ok, f"max |eig - quadratic root| = {worst:.1e} (< 1e-10); C/D = +-i wn "
                          f"(err {center_err:.1e}), E = double zero: {structure}; {tm.elapsed:.2f} s (< 1 s)")


def test_c09_decay(verdict):
    with Timer() as tm:
        model = assemble_vessel()
        traj = decay_test(model, offset=1.0, duration=30.0, dt=0.01)
    z, t = traj.pos[:, 2], traj.t
    up = np.flatnonzero((z[:-1] < 0) & (z[1:] >= 0))
    tc = t[up] - z[up] * (t[up + 1] - t[up]) / (z[up + 1] - z[up])
    wd = 2 * np.pi / np.diff(tc).mean()
    wn = math.sqrt(model.C[2, 2] / (model.M[2, 2] + model.A[2, 2]))
    peaks = [i for i in range(1, len(z) - 1) if z[i] > 0 and z[i - 1] < z[i] >= z[i + 1]][:5]
    dec = float(np.mean(np.log(z[peaks[:-1]] / z[peaks[1:]])))
    dec_theory = 2 * np.pi * 0.1 / math.sqrt(1 - 0.1**2)
    f_err, d_err = wd / wn - 1, dec / dec_theory - 1
    ok = abs(f_err) < 0.02 and abs(d_err) < 0.05 and tm.elapsed < 10.0
    assert verdict(9, ok, f"heave decay w = {wd:.4f} vs wn {wn:.4f} ({f_err:+.2%}, < 2%); "
                          f"log decrement {dec:.4f} vs {dec_theory:.4f} ({d_err:+.2%}, < 5%); "
                          f"{tm.elapsed:.1f} s (< 10 s)")


def test_c10_euler_kinematics(verdict):
    rng = np.random.default_rng(10)
    worst = 0.0
    with Timer() as tm:
        lim = math.pi / 2 - PITCH_GUARD
        for phi, theta, psi in zip(rng.uniform(-np.pi, np.pi, 1000), rng.uniform(-lim, lim, 1000),
                                   rng.uniform(-np.pi, np.pi, 1000)):
            T1 = euler_transform(phi, theta, psi)[:3, :3]
            worst = max(worst, np.abs(T1.T @ T1 - np.eye(3)).max(), np.abs(T1 @ T1.T - np.eye(3)).max())
        identity = np.array_equal(euler_transform(0.0, 0.0, 0.0), np.eye(6))
    ok = worst < 1e-12 and identity and tm.elapsed < 1.0
    assert verdict(10, ok, f"max |T1^T T1 - I| = {worst:.1e} (< 1e-12); T(0,0,0) = I: {identity}; "
                           f"{tm.elapsed:.2f} s (< 1 s)")


def test_c11_jsd_axioms(verdict):
    rng = np.random.default_rng(11)
    edges = np.linspace(0.0, 1.0, 102)

    def pdf(p):
        return Pdf(edges, p / p.sum(), 1)

    with Timer() as tm:
        P = pdf(rng.random(101))
        zero = jsd(P, P)
        one_hot = np.zeros(101)
        one_hot[0] = 1.0
        other = np.zeros(101)
        other[50:] = 1.0
        disjoint = jsd(pdf(one_hot), pdf(other))
        worst_sym, largest = 0.0, 0.0
        for _ in range(1000):
            a = rng.random(101) * (rng.random(101) < 0.7)
            b = rng.random(101) ** 3
            A, B = pdf(a + 1e-300 * (a.sum() == 0)), pdf(b)
            ab, ba = jsd(A, B), jsd(B, A)
            worst_sym = max(worst_sym, abs(ab - ba))
            largest = max(largest, ab, ba)
    ok = (zero == 0.0 and worst_sym <= 1e-14 and abs(disjoint - math.log(2)) <= 1e-14
          and largest <= math.log(2) and tm.elapsed < 1.0)
    assert verdict(11, ok, f"JSD(P,P) = {zero:g}; max asymmetry {worst_sym:.1e} (<= 1e-14); "
                           f"disjoint - ln2 = {disjoint - math.log(2):.1e}; max JSD {largest:.4f} "
                           f"(<= {math.log(2):.4f}); {tm.elapsed:.2f} s (< 1 s)")


def test_c12_fds_hybrid_closure(verdict):
    plan = ExperimentPlan.from_dict({"study": "seaway-grid"})
    assert plan.train_duration == 150.0 and plan.train_condition.hs == 4.0
    with Timer() as tm:
        rows = run_study(plan, write=False)

    def acc_jsd(model_id, cond, dof):
        (r,) = [r for r in rows if r["model_id"] == model_id and r["Hs"] == cond.hs
                and r["Tp_or_wp"] == cond.tp and r["dof"] == dof and r["quantity"] == "acc"]
        return r["jsd"]

    wins, parts = 0, []
    for cond in plan.test_conditions:
        better = [acc_jsd("hybrid", cond, d) <= acc_jsd("linear", cond, d) for d in ("heave", "pitch")]
        wins += all(better)
        if not all(better):
            lost = ",".join(d for d, b in zip(("heave", "pitch"), better) if not b)
            parts.append(f"Hs={cond.hs:g}/Tp={cond.tp:g} lost {lost}")
    ok = wins >= 8 and tm.elapsed < 1800.0
    assert verdict(12, ok, f"hybrid <= linear acc JSD (heave and pitch) in {wins}/9 conditions (>= 8)"
                           f"{'; ' + '; '.join(parts) if parts else ''}; {tm.elapsed:.0f} s (< 1800 s)")


def test_c13_gradient_check(verdict):
    rng = np.random.default_rng(13)
    with Timer() as tm:
        params = init_params([20, 30, 30, 1], rng)
        params = [(W, b + rng.normal(scale=0.1, size=b.shape)) for W, b in params]
        X, Y = rng.normal(size=(16, 20)), rng.normal(size=(16, 1))
        _, grads = loss_and_grad(params, X, Y)
        eps, worst = 1e-6, 0.0
        for (W, b), (gW, gb) in zip(params, grads):
            for arr, g in ((W, gW), (b, gb)):
                fd = np.empty_like(arr)
                for idx in np.ndindex(arr.shape):
                    old = arr[idx]
                    arr[idx] = old + eps
                    lp, _ = loss_and_grad(params, X, Y)
                    arr[idx] = old - eps
                    lm, _ = loss_and_grad(params, X, Y)
                    arr[idx] = old
                    fd[idx] = (lp - lm) / (2 * eps)
                worst = max(worst, np.linalg.norm(g - fd) / max(np.linalg.norm(g) + np.linalg.norm(fd), 1e-30))
    ok = worst < 1e-5 and tm.elapsed < 1.0
    assert verdict(13, ok, f"max relative error backprop vs central differences = {worst:.1e} (< 1e-5); "
                           f"{tm.elapsed:.2f} s (< 1 s)")
