"""Acceptance suite: one PASS/FAIL line per criterion.

Runs under pytest (the lines are printed even with output capture on) or as
a script: ``python3 tests/test_acceptance.py``.
"""

from __future__ import annotations

import csv
from pathlib import Path
import subprocess
import sys
import tempfile
import time

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from helpers import (FIG1, brute_combine, direct_noisy_table, equivalence_suite, fig1,  # noqa: E402
                     functional_combine, random_factor)
from ici.bench import GeneratorSpec, generate_network, noisy_or_star  # noqa: E402
from ici.engine import ici_query, ve_query  # noqa: E402
from ici.factor import ConvergentContext, combine_all, combine_general, multiply, multiply_all  # noqa: E402
from ici.model import CausalCPD, Query, expand_causal_cpd  # noqa: E402
from ici.ops import MAX, OR, SUM  # noqa: E402
from ici.oracle import joint_enumeration, marginalize_deputies, oracle_query  # noqa: E402
from ici.ordering import elimination_ordering, estimate_cost, legitimacy_problems  # noqa: E402
from ici.transform import build_factor_lists, depute, prepare_query  # noqa: E402

TOL_EQUIV = 1e-9
TOL_EXACT = 1e-12


def _maxdiff(a, b) -> float:
    assert a.scope == b.scope, (a.scope, b.scope)
    return float(np.max(np.abs(a.values - b.values), initial=0.0))


# criteria 1, 2 and 8 share one pass over the suite
_SUITE_RUN = {}


def _run_suite():
    if _SUITE_RUN:
        return _SUITE_RUN
    start = time.perf_counter()
    worst_oracle = worst_ve = 0.0
    cost_mismatch = runs = 0
    n_conv_ev = 0
    for _, net, q in equivalence_suite():
        truth = oracle_query(net, q)
        ici_p = prepare_query(net, q, exploit_causal=True)
        ve_p = prepare_query(net, q, exploit_causal=False)
        n_conv_ev += bool(ici_p.deferred)
        ici_o = elimination_ordering(ici_p, "mindef")
        ve_o = elimination_ordering(ve_p, "mindef")
        ici = ici_query(ici_p, ici_o)
        ve = ve_query(ve_p, ve_o)
        worst_oracle = max(worst_oracle, _maxdiff(ici.answer, truth))
        worst_ve = max(worst_ve, _maxdiff(ici.answer, ve.answer))
        for p, o, r in ((ici_p, ici_o, ici), (ve_p, ve_o, ve)):
            runs += 1
            cost_mismatch += estimate_cost(p, o).max_size != r.cost.max_size
    _SUITE_RUN.update(oracle=worst_oracle, ve=worst_ve, mismatch=cost_mismatch, runs=runs,
                      cases=len(equivalence_suite()), conv_ev=n_conv_ev,
                      seconds=time.perf_counter() - start)
    return _SUITE_RUN


def check_1():
    r = _run_suite()
    ok = r["oracle"] <= TOL_EQUIV
    return ok, (f"ICI vs oracle on {r['cases']} queries ({r['conv_ev']} with convergent evidence): "
                f"max |d| = {r['oracle']:.3g} (tol {TOL_EQUIV:g}), {r['seconds']:.1f}s")


def check_2():
    r = _run_suite()
    return r["ve"] <= TOL_EQUIV, f"ICI vs VE on {r['cases']} queries: max |d| = {r['ve']:.3g}"


def check_3():
    net = fig1()
    d = depute(net)
    het, hom = build_factor_lists(d)
    joint = multiply(combine_all(het, d.context()), multiply_all(hom)).retag(False)
    got = marginalize_deputies(d, joint)
    want = joint_enumeration(net)
    diff = _maxdiff(got, want)
    return (len(het), len(hom)) == (7, 7) and diff <= TOL_EXACT, \
        f"{len(het)} heterogeneous x {len(hom)} homogeneous vs chain rule: max |d| = {diff:.3g}"


def _fig1_and_random_cpds():
    cpds = [cpd for cpd in fig1().cpds.values() if isinstance(cpd, CausalCPD)]
    rng = np.random.default_rng(44)
    for trial in range(60):
        op = (OR, MAX, SUM)[trial % 3]
        d = 2 if op is OR else int(rng.integers(2, 4))
        m = int(rng.integers(1, 5))
        contribs = tuple((i + 1, rng.dirichlet(np.ones(d), size=int(rng.integers(1, 4))))
                         for i in range(m))
        cpds.append(CausalCPD(0, op, contribs, rng.dirichlet(np.ones(d)) if trial % 2 else None))
    return cpds


def check_4():
    worst_fold = worst_direct = worst_norm = 0.0
    cpds = _fig1_and_random_cpds()
    for cpd in cpds:
        table = expand_causal_cpd(cpd)
        d = table.probs.shape[-1]
        # (a) left fold of the functional combination over the contributions
        acc = None
        for _, t in cpd.contributions:
            acc = t.T if acc is None else functional_combine(acc, t.T, cpd.op)
        if cpd.leak is not None:
            acc = functional_combine(acc, cpd.leak.reshape(d), cpd.op)
        fold = np.moveaxis(acc, 0, -1)
        worst_fold = max(worst_fold, float(np.max(np.abs(fold - table.probs))))
        # (b) direct sum over every tuple of contribution values
        direct = direct_noisy_table([t for _, t in cpd.contributions], cpd.op, d, cpd.leak)
        worst_direct = max(worst_direct, float(np.max(np.abs(direct - table.probs))))
        worst_norm = max(worst_norm, float(np.max(np.abs(table.probs.sum(axis=-1) - 1.0))))
    ok = max(worst_fold, worst_direct, worst_norm) <= TOL_EXACT
    return ok, (f"{len(cpds)} CPDs: fold |d| = {worst_fold:.3g}, direct |d| = {worst_direct:.3g}, "
                f"normalisation |d| = {worst_norm:.3g}")


def check_5():
    rng = np.random.default_rng(55)
    worst = 0.0
    exact = True
    for trial in range(100):
        n_conv = trial % 3
        ctx = ConvergentContext({v: (MAX if v == 0 else OR) for v in range(n_conv)},
                                frozenset(range(n_conv)))
        cards = {0: 3, 1: 2, 2: 2, 3: 3, 4: 2}
        scopes = [sorted(int(v) for v in rng.choice(5, size=int(rng.integers(1, 4)), replace=False))
                  for _ in range(3)]
        f, g, h = (random_factor(rng, s, cards) for s in scopes)
        fg, gf = combine_general(f, g, ctx), combine_general(g, f, ctx)
        left = combine_general(fg, h, ctx)
        right = combine_general(f, combine_general(g, h, ctx), ctx)
        worst = max(worst, _maxdiff(fg, gf), _maxdiff(left, right),
                    _maxdiff(fg, brute_combine(f, g, ctx)))
        shared_conv = set(f.scope) & set(g.scope) & ctx.convergent
        if not shared_conv:
            exact &= np.array_equal(fg.values, multiply(f, g).values)
    ok = worst <= TOL_EXACT and exact
    return ok, (f"100 trials with 0-2 convergent variables: max |d| = {worst:.3g}; "
                f"no-shared-convergent case equals multiplication exactly: {exact}")


def _legitimacy_cases(n: int):
    """``n`` prepared queries whose working network has a deputed convergent variable."""
    i = 0
    found = 0
    while found < n:
        rng = np.random.default_rng([6, i])
        nodes = int(rng.integers(5, 30))
        spec = GeneratorSpec(nodes=nodes, max_parents=min(4, nodes - 1), cardinality=(2, 3),
                             convergent_fraction=float(rng.uniform(0.3, 0.9)),
                             ops=("or", "max", "sum"), leak_probability=0.5, seed=60_000 + i)
        i += 1
        net = generate_network(spec)
        conv = net.convergent()
        if not conv:
            continue
        # targets are sometimes convergent, so target rewriting is exercised too
        pool = [v for v in range(len(net)) if v not in conv]
        target = int(rng.choice(conv if not pool or rng.random() < 0.3 else pool))
        others = [v for v in range(len(net)) if v != target]
        k = int(rng.integers(0, min(4, len(others)) + 1))
        ev = tuple((int(v), int(rng.integers(net.card(int(v)))))
                   for v in sorted(rng.choice(others, size=k, replace=False)))
        p = prepare_query(net, Query((target,), ev))
        if not p.deputies():
            continue
        found += 1
        yield p


def check_6():
    violations = 0
    n = 1000
    for p in _legitimacy_cases(n):
        for h in ("mcs", "mindef"):
            violations += bool(legitimacy_problems(p, elimination_ordering(p, h)))
    return violations == 0, f"{n} deputed queries x 2 heuristics: {violations} violations"


def _fan_in_cases(n: int):
    i = 0
    found = 0
    while found < n:
        spec = GeneratorSpec(nodes=16, max_parents=7, cardinality=(2, 3), convergent_fraction=0.5,
                             ops=("or", "max"), leak_probability=0.5, seed=70_000 + i)
        i += 1
        net = generate_network(spec)
        wide = [v for v in net.convergent() if len(net.parents(v)) >= 5]
        if wide:
            found += 1
            yield net, wide[0]


def check_7():
    star = noisy_or_star(10)
    q = Query((star.id_of("e"),))
    costs = {}
    for engine in ("ici", "ve"):
        p = prepare_query(star, q, exploit_causal=engine == "ici")
        costs[engine] = estimate_cost(p, elimination_ordering(p, "mindef")).max_size
    wins = 0
    n = 100
    for net, e in _fan_in_cases(n):
        c = {}
        for engine in ("ici", "ve"):
            p = prepare_query(net, Query((e,)), exploit_causal=engine == "ici")
            c[engine] = estimate_cost(p, elimination_ordering(p, "mindef")).max_size
        wins += c["ici"] <= c["ve"]
    ok = costs == {"ici": 4, "ve": 2048} and wins >= 90
    return ok, (f"star m=10: ICI {costs['ici']} / VE {costs['ve']}; "
                f"ICI <= VE on {wins}/{n} networks with fan-in >= 5")


def check_8():
    r = _run_suite()
    return r["mismatch"] == 0, f"{r['runs']} numeric runs: {r['mismatch']} estimate mismatches"


def _cli(*args) -> subprocess.CompletedProcess:
    return subprocess.run([sys.executable, "-m", "ici.cli", *args], capture_output=True, text=True)


def _csv_mean(path: Path) -> float:
    with path.open() as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["cost", "cnv"]
    total = prev = 0
    for cost, cnv in rows[1:]:
        total += int(cost) * (int(cnv) - prev)
        prev = int(cnv)
    return total / prev


def check_9():
    ks = (5, 10, 20)
    argv = ["bench", "--gen", "cpsc-like", "--seed", "7", "--queries", "100", "--no-plot"]
    argv += [a for k in ks for a in ("--k", str(k))]
    with tempfile.TemporaryDirectory() as tmp:
        outs = [Path(tmp) / "run1", Path(tmp) / "run2"]
        for out in outs:
            proc = _cli(*argv, "--out", str(out))
            if proc.returncode:
                return False, f"bench exited {proc.returncode}: {proc.stderr.strip()}"
        names = [f"queries_k{k}_mindef.csv" for k in ks]
        same = all((outs[0] / n).read_bytes() == (outs[1] / n).read_bytes() for n in names)
        means = [_csv_mean(outs[0] / n) for n in names]
        counts = [int((outs[0] / n).read_text().splitlines()[-1].split(",")[1]) for n in names]
    monotone = all(a <= b for a, b in zip(means, means[1:]))
    ok = same and monotone and counts == [100] * 3
    return ok, (f"seed 7, k = 5/10/20: mean cost {', '.join(f'{m:.6g}' for m in means)}; "
                f"repeat run byte-identical: {same}")


def _parse_joint(stdout: str) -> np.ndarray:
    lines = stdout.splitlines()
    i = lines.index("# P(X, Y=Y0)") + 2
    vals = []
    while not lines[i].startswith("#"):
        vals.append(float(lines[i].split("\t")[-1]))
        i += 1
    return np.array(vals)


def check_10():
    net = fig1()
    cases = [(["y"], {}), (["a", "e3"], {"y": 1}), (["e2"], {"e1": 1, "c": 0}),
             (["b"], {"e3": 0, "y": 1}), (["e1", "e2"], {"a": 1})]
    worst = 0.0
    for engine in ("ici", "ve"):
        for targets, ev in cases:
            argv = ["infer", "--net", str(FIG1), "--engine", engine]
            argv += [a for t in targets for a in ("--target", t)]
            argv += [a for k, v in ev.items() for a in ("--evidence", f"{k}={v}")]
            proc = _cli(*argv)
            if proc.returncode:
                return False, f"infer exited {proc.returncode}: {proc.stderr.strip()}"
            truth = oracle_query(net, Query.from_names(net, targets, ev))
            worst = max(worst, float(np.max(np.abs(_parse_joint(proc.stdout) - truth.flat))))
    bad = _cli("infer", "--net", str(FIG1), "--target", "y",
               "--evidence", "a=0", "--evidence", "b=0", "--evidence", "e1=1")
    ok = worst <= TOL_EQUIV and bad.returncode == 5
    return ok, (f"{2 * len(cases)} CLI queries vs oracle: max |d| = {worst:.3g}; "
                f"impossible evidence exit code {bad.returncode}")


CHECKS = {1: ("oracle equivalence", check_1), 2: ("engine equivalence", check_2),
          3: ("joint identity", check_3), 4: ("expansion identity", check_4),
          5: ("operator laws", check_5), 6: ("legitimacy", check_6),
          7: ("cost gap", check_7), 8: ("cost-model fidelity", check_8),
          9: ("bench methodology", check_9), 10: ("CLI end-to-end", check_10)}


def _line(n: int, ok: bool, detail: str) -> str:
    return f"{'PASS' if ok else 'FAIL'} criterion {n} ({CHECKS[n][0]}): {detail}"


@pytest.mark.parametrize("n", sorted(CHECKS))
def test_criterion(n, capsys):
    ok, detail = CHECKS[n][1]()
    with capsys.disabled():
        print("\n" + _line(n, ok, detail))
    assert ok, detail


if __name__ == "__main__":
    results = []
    for n in sorted(CHECKS):
        ok, detail = CHECKS[n][1]()
        results.append(ok)
        print(_line(n, ok, detail), flush=True)
    print(f"{sum(results)}/{len(results)} criteria pass")
    sys.exit(0 if all(results) else 1)
