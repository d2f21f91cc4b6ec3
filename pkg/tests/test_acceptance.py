"""Acceptance gate: eleven end-to-end criteria, one pass/fail line each."""

import time

import numpy as np

from subproj import (
    BallSpec,
    CardinalityFunction,
    Chain,
    SolverOptions,
    a2fw_project,
    afw_project,
    bruteforce_project,
    edmonds_greedy,
    enumerate_vertices,
    face_greedy,
    face_safety_radii,
    check_perturb_conditions,
    generate_losses,
    infer_from_iterate,
    infer_from_previous,
    mc_same_face,
    mc_vertex_fraction,
    ofw_fpl_run,
    omd_run,
    pav_project,
    permutahedron,
    round_rational,
    substream,
)

import conftest
from conftest import gaussian_point, random_cardinality


def _report(num, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {num:02d}: {detail}"
    print(line, flush=True)
    conftest.ACCEPTANCE_LINES.append(line)
    assert ok, line


def test_criterion_01_pav_example():
    f = CardinalityFunction([0, 1, 1, 1])
    y = np.array([4.8, 4.6, 2.7])
    best = np.inf
    for _ in range(10):
        res = pav_project(f, "euclid", y)
        best = min(best, res.time_sec)
    err = float(np.max(np.abs(res.x - np.array([0.6, 0.4, 0.0]))))
    ok = err <= 1e-12 and best < 1e-3
    _report(1, ok, f"simplex example error {err:.2e} (<=1e-12), best runtime "
                   f"{best * 1e3:.3f} ms (<1 ms)")


def test_criterion_02_pav_vs_bruteforce():
    t0 = time.perf_counter()
    rng = substream(2, "accept")
    worst = 0.0
    for trial in range(200):
        n = int(rng.integers(3, 7))
        mp = "euclid" if trial % 2 == 0 else "kl"
        if mp == "kl":
            incs = np.sort(rng.uniform(0.1, 2.0, n))[::-1]
            f = CardinalityFunction([0.0] + list(np.cumsum(incs)))
            y = rng.uniform(0.1, 2.0 * n, n)
        else:
            f = random_cardinality(n, rng)
            y = gaussian_point(n, rng)
        xs = pav_project(f, mp, y).x
        xb = bruteforce_project(f, mp, y)
        worst = max(worst, float(np.max(np.abs(xs - xb))))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-8 and elapsed < 30
    _report(2, ok, f"200 instances euclid+kl, worst coordinate error {worst:.2e} "
                   f"(<=1e-8) in {elapsed:.1f} s (<30 s)")


def test_criterion_03_greedy_vs_enumeration():
    t0 = time.perf_counter()
    rng = substream(3, "accept")
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(2, 7))
        f = random_cardinality(n, rng)
        c = rng.normal(0, 1, n)
        v, _ = edmonds_greedy(f, c)
        best = max(float(c @ u) for u in enumerate_vertices(f))
        worst = max(worst, abs(float(c @ v) - best))
        perm = rng.permutation(n)
        cut = int(rng.integers(1, n + 1))
        chain = Chain([frozenset(int(e) for e in perm[:cut])]).with_ground_set(n)
        xf = face_greedy(f, c, chain)
        bestf = max(float(c @ u) for u in enumerate_vertices(f, chain))
        worst = max(worst, abs(float(c @ xf) - bestf))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-9 and elapsed < 10
    _report(3, ok, f"200 (f,c,chain) instances, worst optimality gap {worst:.2e} "
                   f"in {elapsed:.1f} s (<10 s)")


def test_criterion_04_fw_solvers():
    t0 = time.perf_counter()
    opts = SolverOptions(eps=1e-7)
    worst_afw = worst_a2fw = 0.0
    for i in range(100):
        rng = substream(11, "fwacc", i)
        n = int(rng.integers(3, 21))
        f = permutahedron(n)
        y = gaussian_point(n, rng)
        xs = pav_project(f, "euclid", y).x
        ra = afw_project(f, "euclid", y, opts)
        rb = a2fw_project(f, "euclid", y, opts=opts)
        worst_afw = max(worst_afw, float(np.linalg.norm(ra.x - xs)))
        worst_a2fw = max(worst_a2fw, float(np.linalg.norm(rb.x - xs)))
    exact = 0
    for i in range(100):
        rng = substream(11, "fwaccint", i)
        n = int(rng.integers(3, 21))
        f = permutahedron(n)
        y = rng.integers(-2 * n, 2 * n, n).astype(float)
        rb = a2fw_project(f, "euclid", y, opts=opts)
        exact += rb.exact
        xs = pav_project(f, "euclid", y).x
        worst_a2fw = max(worst_a2fw, float(np.linalg.norm(rb.x - xs)))
    elapsed = time.perf_counter() - t0
    ok = worst_afw <= 1e-5 and worst_a2fw <= 1e-5 and exact >= 90 and elapsed < 120
    _report(4, ok, f"100 continuous instances: afw err {worst_afw:.2e}, a2fw err "
                   f"{worst_a2fw:.2e} (<=1e-5); integral a2fw exact {exact}/100 "
                   f"(>=90) in {elapsed:.1f} s (<2 min)")


def test_criterion_05_inference_soundness():
    from subproj import get_map
    from subproj.fw import coordinate_bounds
    rng = substream(5, "accept")
    false_positives = 0
    checked = 0
    for trial in range(500):
        n = int(rng.integers(3, 7))
        mp_name = "euclid" if trial % 3 else "kl"
        if mp_name == "kl":
            incs = np.sort(rng.uniform(0.2, 2.0, n))[::-1]
            f = CardinalityFunction([0.0] + list(np.cumsum(incs)))
            y = rng.uniform(0.2, 2.0 * n, n)
        else:
            f = random_cardinality(n, rng)
            y = gaussian_point(n, rng)
        mp = get_map(mp_name)
        lo, hi = coordinate_bounds(f)
        L = 1.0 if mp_name == "euclid" else mp.curvature_bounds(max(lo, 1e-3), hi)[1]
        x = pav_project(f, mp_name, y).x
        scale = 1.0 + abs(f.value(range(n)))

        # T1: perturb y within eps, verify inferred sets on the new projection
        eps = float(rng.uniform(0.005, 0.5))
        d = rng.normal(0, 1, n)
        ytilde = y + eps * rng.random() * d / np.linalg.norm(d)
        if mp_name == "kl":
            ytilde = np.maximum(ytilde, 0.05)
            eps = max(eps, float(np.linalg.norm(ytilde - y)))
        xt = bruteforce_project(f, mp_name, ytilde)
        for S, _ in infer_from_previous(x, y, ytilde, eps=eps, L=L, mp=mp_name).witnesses:
            checked += 1
            if abs(float(np.sum(xt[sorted(S)])) - f.value(S)) > 1e-7 * scale:
                false_positives += 1

        # T2: iterate near the optimum, verify inferred sets on the optimum
        eps2 = float(rng.uniform(1e-4, 0.3))
        noise = rng.normal(0, 1, n)
        z = x + eps2 * rng.random() * noise / np.linalg.norm(noise)
        if mp_name == "kl":
            z = np.maximum(z, 1e-3)
            eps2 = max(eps2, float(np.linalg.norm(z - x)))
        grad_h = mp.grad(z) - mp.grad(y)
        xb = bruteforce_project(f, mp_name, y)
        for S, _ in infer_from_iterate(grad_h, eps=eps2, L=L).witnesses:
            checked += 1
            if abs(float(np.sum(xb[sorted(S)])) - f.value(S)) > 1e-7 * scale:
                false_positives += 1
    ok = false_positives == 0 and checked > 200
    _report(5, ok, f"500 instances (euclid+kl), {checked} inferred sets verified, "
                   f"{false_positives} false positives (must be 0)")


def test_criterion_06_rounding():
    rng = substream(6, "accept")
    recovered = 0
    for _ in range(1000):
        n = int(rng.integers(2, 9))
        f = random_cardinality(n, rng, integral=True)
        y = rng.integers(-2 * n, 2 * n, n).astype(float)
        xstar = pav_project(f, "euclid", y).x
        noise = rng.normal(0, 1, n)
        noise *= 0.99 * rng.random() / (2 * n * n) / np.linalg.norm(noise)
        res = round_rational(xstar + noise, n=n, f=f, y=y)
        exact_ref = round_rational(xstar, n=n, f=f, y=y)
        if res.fractions == exact_ref.fractions and \
                np.max(np.abs(res.x - xstar)) <= 1e-9:
            recovered += 1
    ok = recovered == 1000
    _report(6, ok, f"rational rounding recovered the exact projection in "
                   f"{recovered}/1000 trials (need 1000)")


def test_criterion_07_perturbation_iff_and_radii():
    rng = substream(7, "accept")
    agree = 0
    for _ in range(500):
        n = int(rng.integers(2, 6))
        f = random_cardinality(n, rng)
        y = gaussian_point(n, rng)
        res = pav_project(f, "euclid", y)
        eps_vec = rng.normal(0, 10 ** rng.uniform(-3, 0.5), n)
        verdict = check_perturb_conditions(f, res.chain, res.x, y, eps_vec)
        res2 = pav_project(f, "euclid", y + eps_vec)
        agree += verdict.same_face == (res.levels.blocks == res2.levels.blocks)
    counterexamples = 0
    trials = 0
    while trials < 1000:
        n = int(rng.integers(2, 6))
        f = random_cardinality(n, rng)
        y = gaussian_point(n, rng)
        res = pav_project(f, "euclid", y)
        d1, d2 = face_safety_radii(f, res.chain, res.x, y)
        r = max(d1, d2)
        if not np.isfinite(r) or r <= 0:
            continue
        trials += 1
        e = rng.normal(0, 1, n)
        e *= 0.9 * r / np.linalg.norm(e)
        res2 = pav_project(f, "euclid", y + e)
        if res.levels.blocks != res2.levels.blocks:
            counterexamples += 1
    ok = agree == 500 and counterexamples == 0
    _report(7, ok, f"iff agreement {agree}/500 (need 500); corollary radii "
                   f"counterexamples {counterexamples}/1000 (need 0)")


_GEOM = {}


def _geometry_estimates():
    if not _GEOM:
        f = permutahedron(5)
        for R in (10.0, 100.0, 1000.0):
            spec = BallSpec(np.zeros(5), R)
            _GEOM[("v", R)] = mc_vertex_fraction(f, spec, 20000, seed=123)
            _GEOM[("s", R)] = mc_same_face(f, spec, 0.1, 20000, seed=123)
    return _GEOM


def test_criterion_08_vertex_fraction():
    t0 = time.perf_counter()
    est = _geometry_estimates()
    v10, v100, v1000 = (est[("v", R)] for R in (10.0, 100.0, 1000.0))
    monotone = (v100.estimate >= v10.estimate - 2 * (v10.stderr + v100.stderr)
                and v1000.estimate >= v100.estimate - 2 * (v100.stderr + v1000.stderr))
    elapsed = time.perf_counter() - t0
    ok = v1000.estimate >= 0.95 and monotone and elapsed < 60
    _report(8, ok, f"vertex fraction at R=1e3: {v1000.estimate:.4f} (>=0.95); "
                   f"R=10,100: {v10.estimate:.4f},{v100.estimate:.4f} nondecreasing "
                   f"within 2*stderr; {elapsed:.1f} s (<1 min)")


def test_criterion_09_same_face_fraction():
    est = _geometry_estimates()
    s10, s100, s1000 = (est[("s", R)] for R in (10.0, 100.0, 1000.0))
    monotone = (s100.estimate >= s10.estimate - 2 * (s10.stderr + s100.stderr)
                and s1000.estimate >= s100.estimate - 2 * (s100.stderr + s1000.stderr))
    ok = s1000.estimate >= 0.8 and monotone
    _report(9, ok, f"same-face fraction at R=1e3, eps=0.1: {s1000.estimate:.4f} "
                   f"(>=0.8); trend {s10.estimate:.4f}->{s100.estimate:.4f}->"
                   f"{s1000.estimate:.4f} nondecreasing within 2*stderr")


def test_criterion_10_online():
    t0 = time.perf_counter()
    f = permutahedron(20)
    opts = SolverOptions(eps=1e-7)
    pav_regrets, a2fw_regrets, fpl_regrets = [], [], []
    warm_wins = 0
    max_diff = 0.0
    for seed in range(10):
        stream = generate_losses(20, 500, a=1, b=0, seed=seed)
        rp = omd_run(f, "euclid", stream, projector="pav")
        ra = omd_run(f, "euclid", stream, projector="a2fw", opts=opts)
        rv = omd_run(f, "euclid", stream, projector="afw", opts=opts)
        rf = ofw_fpl_run(f, stream, seed=seed)
        pav_regrets.append(rp.regret)
        a2fw_regrets.append(ra.regret)
        fpl_regrets.append(rf.regret)
        max_diff = max(max_diff, abs(rp.regret - ra.regret))
        warm_wins += ra.total_iters <= rv.total_iters
    elapsed = time.perf_counter() - t0
    ordering = float(np.mean(pav_regrets)) <= float(np.mean(fpl_regrets))
    soft = warm_wins >= 7
    ok = ordering and max_diff <= 0.5 and elapsed < 300
    _report(10, ok, f"mean regret OMD(pav) {np.mean(pav_regrets):.2f} <= FPL "
                    f"{np.mean(fpl_regrets):.2f}: {ordering}; max |pav-a2fw| regret "
                    f"diff {max_diff:.2e} (<=0.5); warm iters<=vanilla on "
                    f"{warm_wins}/10 seeds (soft target >=7: {soft}); "
                    f"{elapsed:.0f} s (<5 min)")


def test_criterion_11_fenchel_duality():
    rng = substream(11, "accept")
    ok = True
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(2, 10))
        f = random_cardinality(n, rng)
        y = gaussian_point(n, rng)
        res = pav_project(f, "euclid", y)
        # dual feasibility: levels (pooled dual values) strictly increase
        if any(res.levels.levels[i] >= res.levels.levels[i + 1]
               for i in range(res.levels.k - 1)):
            ok = False
        # complementary chain = primal tight chain
        scale = 1.0 + abs(f.value(range(n)))
        for S in res.chain:
            if abs(float(np.sum(res.x[sorted(S)])) - f.value(S)) > 1e-8 * scale:
                ok = False
        worst = max(worst, res.dual_residual)
    ok = ok and worst <= 1e-8
    _report(11, ok, f"dual feasibility + complementary chain on 200 instances; "
                    f"worst duality residual {worst:.2e} (<=1e-8)")
