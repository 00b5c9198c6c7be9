"""Acceptance criteria 1-12 at desk scale (L = 10^7).

Each test records one ``PASS``/``FAIL`` line; the lines are printed at the
end of the pytest session and also when this file is run as a script:

    python tests/test_acceptance.py
"""

import itertools
import json
import math
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from conftest import DESK_LENGTH, desk_sample  # noqa: E402
from returnlab import experiments as ex  # noqa: E402
from returnlab.cli import main as cli_main  # noqa: E402
from returnlab.core import lemma0_periodic_envelope, g_p_bound  # noqa: E402
from returnlab.generators import Bernoulli, Markov, Periodic, Sturmian  # noqa: E402

pytestmark = pytest.mark.slow

RESULTS: dict = {}

BERNOULLI = Bernoulli((0.5, 0.5))
MARKOV = Markov(((0.9, 0.1), (0.4, 0.6)))
PERIOD6 = Periodic((0, 1, 2, 3, 4, 5))


def record(number: int, title: str, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} [{number:2d}] {title}: {detail}"
    RESULTS[number] = line
    print(line)


def report_lines() -> list:
    return [RESULTS[k] for k in sorted(RESULTS)]


# -- independent oracles ------------------------------------------------------


def _kmp_table(word) -> np.ndarray:
    """Automaton on matched-prefix length; state ``n`` is a full match and continues from the border."""
    n = len(word)
    fail = [0] * (n + 1)
    for i in range(1, n):
        j = fail[i]
        while j and word[i] != word[j]:
            j = fail[j]
        fail[i + 1] = j + 1 if word[i] == word[j] else 0
    d = np.zeros((n + 1, 2), dtype=np.int64)
    for s in range(n + 1):
        for a in (0, 1):
            j = s if s < n else fail[n]
            while j and word[j] != a:
                j = fail[j]
            d[s, a] = j + 1 if word[j] == a else 0
    return d


def exact_coin_intensities(n: int, horizon: float = 20.0):
    """Exact repelling/attracting intensity of every binary n-block under the fair coin.

    Propagates the law of the automaton state from a full match until the
    next full match, for all 2^n words at once; G is evaluated at the
    return-time lattice ``mu * k``.
    """
    words = list(itertools.product((0, 1), repeat=n))
    W, S = len(words), n + 1
    mu = 2.0**-n
    T = int(horizon / mu)
    delta = np.stack([_kmp_table(w) for w in words])
    base = (np.arange(W) * S)[:, None]
    idx0, idx1 = (base + delta[:, :, 0]).ravel(), (base + delta[:, :, 1]).ravel()
    mass = np.zeros((W, S))
    mass[:, n] = 1.0
    surv = np.empty((W, T))
    surv[:, 0] = 1.0
    for k in range(T):
        if k:
            mass[:, n] = 0.0
            surv[:, k] = mass.sum(axis=1)
        half = 0.5 * mass.ravel()
        mass = (np.bincount(idx0, half, W * S) + np.bincount(idx1, half, W * S)).reshape(W, S)
    t = mu * np.arange(T + 1)
    G = np.concatenate((np.zeros((W, 1)), mu * np.cumsum(surv, axis=1)), axis=1)
    D = G - (1 - np.exp(-t))
    return words, np.maximum(D.max(axis=1), 0), np.maximum((-D).max(axis=1), 0), mu


def brute_force_mixture_g(p, kinds, params, t_max=10.0, step=0.01):
    """Numeric G of ``sum_k p(1-p)^(k-1) F^(k)(t/p)`` on a grid that contains every atom."""
    K = len(kinds)
    k = np.arange(1, K + 1, dtype=float)
    w = p * (1 - p) ** (k - 1)
    atoms = [np.zeros(0)]
    for j in range(K):
        if kinds[j] == "point":
            atoms.append(np.array([p * k[j]]))
        elif kinds[j] == "two":
            a, b, _ = params[j]
            atoms.append(np.array([p * a, p * b]))
    nodes = np.union1d(np.arange(0, t_max + step / 2, step), np.concatenate(atoms))
    nodes = nodes[nodes <= t_max]
    mids = (nodes[:-1] + nodes[1:]) / 2
    surv = np.zeros_like(mids)
    for j in range(K):
        u = mids / p
        kk = k[j]
        if kinds[j] == "point":
            s = (u < kk).astype(float)
        elif kinds[j] == "two":
            a, b, wb = params[j]
            s = np.where(u < a, 1.0, np.where(u < b, wb, 0.0))
        elif kinds[j] == "exp":
            s = np.exp(-u / kk)
        else:  # uniform on [0, 2k]
            s = np.clip(1 - u / (2 * kk), 0, 1)
        surv += w[j] * s
    G = np.concatenate(([0.0], np.cumsum(surv * np.diff(nodes))))
    return nodes, G


# -- criteria -----------------------------------------------------------------


def test_01_kac():
    rows = {
        "bernoulli": ex.kac_suite(desk_sample(BERNOULLI), (6, 6))[0],
        "markov": ex.kac_suite(desk_sample(MARKOV), (6, 6))[0],
        "example1": ex.kac_suite(desk_sample(ex.DESK_EXAMPLE1), (6, 6))[0],
    }
    ok = all(0.95 <= r.mean_normalized_return <= 1.05 for r in rows.values())
    record(1, "Kac normalization n=6", ok, ", ".join(f"{k} {r.mean_normalized_return:.4f}" for k, r in rows.items()))
    assert ok


def test_02_periodic_extremal():
    seq = desk_sample(PERIOD6, 1_000_000)
    s = ex.block_survey(seq, 6)
    ok = (
        s.block_count == 6
        and np.all(np.abs(s.repelling - math.exp(-1)) <= 1e-3)
        and np.all(np.abs(s.repelling_at - 1.0) <= 1e-3)
    )
    record(
        2,
        "periodic extremal",
        bool(ok),
        f"{s.block_count} blocks, repelling in [{s.repelling.min():.6f}, {s.repelling.max():.6f}] at t in [{s.repelling_at.min():.6f}, {s.repelling_at.max():.6f}]",
    )
    assert ok


def test_03_exponential_baseline(bernoulli_desk):
    s = ex.block_survey(bernoulli_desk, 10)
    good = (s.ks < 0.06) & (s.repelling < 0.06) & (s.attracting < 0.06)
    frac = s.fraction_where(good)
    ok = frac >= 0.95
    record(3, "exponential baseline n=10", ok, f"analyzed mass {s.analyzed_mass:.4f}, unbiased share {frac:.4f} (need >= 0.95)")
    assert ok


def test_04_theorem1_decay(bernoulli_desk):
    curve = ex.theorem1_decay(bernoulli_desk, (4, 10), 0.05)
    r4, r10 = curve.row(4).repelling_mass, curve.row(10).repelling_mass
    # oracle: exact per-block intensities under the true coin measure
    oracle = {}
    for n in (4, 10):
        _, rep, _, mu = exact_coin_intensities(n)
        oracle[n] = float(np.sum(rep >= 0.05) * mu)
    ok = r10 <= 0.05 and r10 < r4 and oracle[10] <= 0.05
    trend = " ".join(f"{r.n}:{r.repelling_mass:.3f}" for r in curve.rows)
    record(4, "Theorem 1 decay eps=0.05", ok, f"repelling mass {trend}; exact-law oracle n=4 {oracle[4]:.3f}, n=10 {oracle[10]:.3f}")
    assert ok


def test_04b_oracle_agrees_with_scan(bernoulli_desk):
    # per-block check of the estimator against the exact law at n = 8
    words, rep, att, _ = exact_coin_intensities(8)
    s = ex.block_survey(bernoulli_desk, 8)
    assert [s.table.word(int(i)) for i in s.index] == words
    assert np.max(np.abs(s.repelling - rep)) < 0.03
    assert np.max(np.abs(s.attracting - att)) < 0.03


CATALOG = {
    "bernoulli": BERNOULLI,
    "markov": MARKOV,
    "periodic": PERIOD6,
    "sturmian": Sturmian(),
    "example1": ex.DESK_EXAMPLE1,
    "example2": ex.DESK_EXAMPLE2,
    "remark4": ex.DESK_REMARK4,
    "mirrored": ex.DESK_MIRRORED,
}


def test_05_skyscraper():
    bad, total, worst = [], 0, 0.0
    for name, spec in CATALOG.items():
        rows = ex.skyscraper_check(desk_sample(spec), 6)
        total += len(rows)
        worst = max([worst] + [max(r.max_excess, r.max_deficit) / r.tolerance for r in rows])
        bad += [f"{name}:{r.block}" for r in rows if not r.passed]
    ok = not bad and total > 0
    record(5, "skyscraper inequality n=6", ok, f"{total} blocks over {len(CATALOG)} processes, worst violation/tol {worst:.3f}, failures {bad[:5]}")
    assert ok


def test_06_lemma0():
    rng = np.random.default_rng(6)
    worst = -math.inf
    for _ in range(1000):
        p = float(rng.uniform(0.01, 0.99))
        kinds = rng.choice(["point", "two", "exp", "uniform"], size=200)
        params = []
        for k in range(1, 201):
            a = rng.uniform(0, k)
            b = rng.uniform(k, 3 * k)
            params.append((a, b, (k - a) / (b - a)))  # mean k
        t, G = brute_force_mixture_g(p, kinds, params)
        env = np.array([lemma0_periodic_envelope(p, x) for x in t])
        worst = max(worst, float(np.max(G - env)))
    grid = np.linspace(0, 20, 2001)
    env_ok = all(
        lemma0_periodic_envelope(p, x) <= g_p_bound(p, x) + 1e-12 for p in np.linspace(0.001, 0.05, 50) for x in grid
    )
    ok = worst <= 1e-6 and env_ok
    record(6, "Lemma 0 envelope", ok, f"max G - envelope over 1000 mixtures {worst:.2e}; envelope <= g_p for p <= 0.05: {env_ok}")
    assert ok


def test_07_example1():
    r = ex.example1_check(desk_sample(ex.DESK_EXAMPLE1), ex.DESK_EXAMPLE1)
    record(
        7,
        "Example 1",
        r.passed,
        f"union mass {r.union_mass:.4f} (1/n = {r.expected_union_mass:.4f}), gaps {r.normalized_gap_range[0]:.4f}..{r.normalized_gap_range[1]:.4f} "
        f"within 1 -+ 1/r: {r.gaps_within_bounds}, repelling mass {r.repelling_mass:.4f}, "
        f"plug-in H/{r.entropy_n} {r.plugin_rate:.4f} vs exact {r.exact_rate:.4f}",
    )
    assert r.passed


def test_08_example2():
    spec = ex.DESK_EXAMPLE2
    rows = ex.example2_attracting_check(desk_sample(spec), (spec.n, spec.n**2))
    control = ex.example2_attracting_check(desk_sample(BERNOULLI), (spec.n, spec.n**2))
    ctrl_max = max(r.median_attracting for r in control)
    ok = ex.example2_passed(rows) and ctrl_max <= 0.05 and len(rows) == spec.n**2 - spec.n + 1
    record(
        8,
        "Example 2 attracting",
        ok,
        f"lengths {rows[0].n}..{rows[-1].n}: min median attracting {min(r.median_attracting for r in rows):.3f}, "
        f"max repelling mass {max(r.repelling_mass for r in rows):.3f}; Bernoulli control max median {ctrl_max:.4f}",
    )
    assert ok


def test_09_remark4():
    r = ex.remark4_check(desk_sample(ex.DESK_REMARK4), 24)
    i = r.intensities
    record(
        9,
        "Remark 4 pairs",
        r.passed,
        f"sup|G - min(1,t/2)| {r.sup_distance:.4f}, repelling {i.repelling.intensity:.4f} at t={i.repelling.distance:.3f} "
        f"(e^-2 = {r.repelling_target:.4f}), attracting {i.attracting.intensity:.4f} at t={i.attracting.distance:.3f} "
        f"((1-ln2)/2 = {r.attracting_target:.4f})",
    )
    assert r.passed


def test_10_mirrored():
    r = ex.mirrored_check(desk_sample(ex.DESK_MIRRORED), 10)
    record(
        10,
        "mirrored Example 3",
        r.passed,
        f"unbiased share at n=10 {r.unbiased_fraction:.4f} (max rep {r.max_repelling:.3f}, att {r.max_attracting:.3f}); "
        f"plug-in rate at n={r.entropy_n} {r.plugin_rate:.3f} (need <= 0.1)",
    )
    assert r.passed


def test_11_ornstein_weiss(bernoulli_desk):
    rows = ex.ornstein_weiss_scale(bernoulli_desk, (6, 14))
    ok = all(0.8 <= r.exponent <= 1.2 for r in rows)
    record(11, "Ornstein-Weiss scale", ok, " ".join(f"{r.n}:{r.exponent:.3f}" for r in rows))
    assert ok


def test_12_determinism(tmp_path):
    cfg = {
        "process": {"kind": "markov", "matrix": [[0.9, 0.1], [0.4, 0.6]]},
        "sample_length": 2_000_000,
        "seed": 12,
        "n_range": [4, 9],
        "epsilon": 0.05,
        "experiments": list(ex_names()),
        "output_dir": str(tmp_path / "unused"),
    }
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    outs = []
    for threads in ("1", "0", "3"):
        out = tmp_path / f"run{threads}"
        cli_main(["all", "--config", str(path), "--output", str(out), "--threads", threads, "--quiet"])
        outs.append(out)
    files = sorted(p.name for p in outs[0].iterdir())
    same = True
    for out in outs[1:]:
        same &= files == sorted(p.name for p in out.iterdir())
        for name in files:
            a, b = (outs[0] / name).read_bytes(), (out / name).read_bytes()
            if name == "summary.json":
                a, b = _strip(a), _strip(b)
            same &= a == b
    record(12, "determinism across --threads", same, f"{len(files)} output files compared over threads 1, 0 (auto), 3")
    assert same


def ex_names():
    return ("theorem1_decay", "limit_law_probe", "kac_suite", "analyze", "ornstein_weiss_scale")


def _strip(raw: bytes) -> dict:
    d = json.loads(raw)
    d.pop("timings")
    d["config"].pop("output_dir")
    return d


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
