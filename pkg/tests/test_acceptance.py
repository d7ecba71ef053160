"""Acceptance criteria 1-10; each test prints one PASS/FAIL line."""

import json
import time

import numpy as np
import pytest

from relupat import Dataset, DecisionPattern, Postcondition
from relupat.affine import polytope_of, propagate
from relupat.cli import main
from relupat.decompose import PlanStatus, prove_contract, prove_via_interpolant, prove_via_prefix_cover, select_interpolant
from relupat.distill import RuleTable, benchmark, build_rule_table, hybrid_classes
from relupat.explain import under_approx_box
from relupat.mine import PatternStatus, mine_layer_patterns, prove_pattern, validate_empirically
from relupat.model import (NeuronId, activation_signature, evaluate, figure1_network, hidden_values,
                           predicted_class, random_network, save_network)
from relupat.oracle import enumerate_dp, grid_counterexample, random_query
from relupat.pattern import is_closed, satisfies, satisfies_batch, save_pattern
from relupat.relax import infer_input_property
from relupat.verify import Budget, Query, Region, Status, dp, dp_layer

from conftest import FIG4A, report

CLASS0 = Postcondition.prediction(0)
WEDGE = DecisionPattern({(1, 0): True, (1, 1): False})


def small_net(rng, max_layers=3, max_width=4):
    n = int(rng.integers(1, 4))
    widths = [n] + [int(rng.integers(1, max_width + 1)) for _ in range(int(rng.integers(1, max_layers + 1)))] + [2]
    return random_network(widths, rng, domain=np.tile([-2.0, 2.0], (n, 1)))


def pre_activations(net, x):
    h, out = np.asarray(x, dtype=float), []
    for w, b in zip(net.weights[:-1], net.biases[:-1]):
        z = w @ h + b
        out.append(z)
        h = np.maximum(z, 0.0)
    return out


def test_criterion_1_figure1_golden():
    t0 = time.perf_counter()
    net = figure1_network()
    checks = []
    checks.append(np.allclose(evaluate(net, [1, -1]), [1, -1], rtol=0, atol=1e-12))
    sig = activation_signature(net, [1, -1])
    checks.append([sig[n] for n in net.neurons()] == [True, False, True, False])
    rows = {(tuple(w), rel, r) for w, rel, r in polytope_of(net, WEDGE).constraints()}
    checks.append(rows == {((1.0, -1.0), ">", 0.0), ((1.0, 1.0), "<=", 0.0)})
    y0, y1 = propagate(net, sig).outputs()
    checks.append(np.allclose(y0.w, [0.5, -0.5], atol=1e-12) and np.allclose(y1.w, [-0.5, 0.5], atol=1e-12)
                  and abs(y0.b) <= 1e-12 and abs(y1.b) <= 1e-12)
    checks.append(dp(net, Query(WEDGE, CLASS0)).status is Status.PROVED)
    checks.append(dp_layer(net, DecisionPattern({(2, 0): True, (2, 1): False}), CLASS0).proved)
    elapsed = time.perf_counter() - t0
    ok = all(checks) and elapsed < 1.0
    report(1, ok, f"{sum(checks)}/{len(checks)} checks, {elapsed:.3f}s")
    assert ok


def test_criterion_2_algorithm1():
    t0 = time.perf_counter()
    res = infer_input_property(figure1_network(), [1, -1], CLASS0)
    elapsed = time.perf_counter() - t0
    ok = (res.proved and res.pattern == WEDGE and res.critical_layer == 1 and res.dp_calls <= 5
          and elapsed < 1.0)
    report(2, ok, f"pattern {res.pattern}, critical layer {res.critical_layer}, "
                  f"{res.dp_calls} dp calls, {elapsed:.3f}s")
    assert ok


def test_criterion_3_decision_tree():
    mined = mine_layer_patterns(figure1_network(), Dataset(FIG4A), 1, CLASS0)
    top = mined[0]
    ok = top.pattern == WEDGE and top.support.count == 2 and top.support.purity == 1.0
    report(3, ok, f"{top.pattern} support {top.support.count} purity {top.support.purity}")
    assert ok


def test_criterion_4_oracle_equivalence():
    rng = np.random.default_rng(42)
    t0 = time.perf_counter()
    agree = total = bad_cex = grid_miss = 0
    for _ in range(200):
        net = small_net(rng)
        sigma, post = random_query(net, rng)
        v = dp(net, Query(sigma, post))
        oracle = enumerate_dp(net, sigma, post)[0]
        total += 1
        agree += v.status == oracle
        if v.refuted:
            x = v.counterexample
            bad_cex += not (satisfies(net, sigma, x) and not post.holds(evaluate(net, x))
                            and np.all(np.abs(x) <= 2.0))
        elif v.proved:
            steps = {1: 2001, 2: 201, 3: 41}[net.input_dim]
            grid_miss += grid_counterexample(net, sigma, post, net.input_domain, steps) is not None
    elapsed = time.perf_counter() - t0
    ok = agree == total and bad_cex == 0 and grid_miss == 0 and elapsed < 300
    report(4, ok, f"{agree}/{total} agree, {bad_cex} invalid counterexamples, "
                  f"{grid_miss} grid disagreements, {elapsed:.1f}s")
    assert ok


def closed_pattern_with_samples(net, rng, k=100):
    """A random closed pattern around a random input, plus ``k`` inputs satisfying it."""
    n = net.input_dim
    x = rng.uniform(-2, 2, size=n)
    sig = activation_signature(net, x)
    depth = int(rng.integers(1, net.num_hidden + 1))
    sigma = sig.restrict(range(1, depth + 1))
    last = [nid for nid in sigma if nid.layer == depth]
    drop = [nid for nid in last if rng.random() < 0.3]
    sigma = sigma.without(drop)
    pts = []
    for radius in (1.0, 0.3, 0.1, 0.03, 0.01, 1e-3):
        cand = x + rng.normal(scale=radius, size=(2000, n))
        pts.extend(cand[satisfies_batch(net, sigma, cand)])
        if len(pts) >= k:
            break
    return sigma, np.array(pts[:k])


def test_criterion_5_theorem1():
    rng = np.random.default_rng(5)
    worst = 0.0
    outside = samples = 0
    for _ in range(100):
        n = int(rng.integers(2, 4))
        widths = [n] + [int(rng.integers(2, 6)) for _ in range(int(rng.integers(1, 4)))] + [int(rng.integers(2, 4))]
        net = random_network(widths, rng)
        for _ in range(10):
            sigma, X = closed_pattern_with_samples(net, rng)
            assert is_closed(net, sigma)
            prop = propagate(net, sigma)
            poly = polytope_of(net, sigma)
            outs = prop.outputs()
            for x in X:
                z = pre_activations(net, x)
                for nid, form in prop.forms.items():
                    worst = max(worst, abs(form(x) - z[nid.layer - 1][nid.index]))
                if outs is not None:
                    worst = max(worst, float(np.max(np.abs(np.array([f(x) for f in outs]) - evaluate(net, x)))))
                sl = poly.slacks(x)
                if sl.size and np.min(np.abs(sl)) <= 1e-9:
                    continue  # boundary sample
                samples += 1
                outside += not poly.contains(x)
    ok = worst <= 1e-9 and outside == 0
    report(5, ok, f"max |symbolic - concrete| = {worst:.2e}, {outside} of {samples} samples outside polytope")
    assert ok


def test_criterion_6_box_soundness():
    rng = np.random.default_rng(6)
    violations = empty = boxes = 0
    for _ in range(50):
        n = int(rng.integers(2, 4))
        widths = [n] + [int(rng.integers(2, 6)) for _ in range(int(rng.integers(1, 4)))] + [2]
        net = random_network(widths, rng, domain=np.tile([-2.0, 2.0], (n, 1)))
        sigma, support = closed_pattern_with_samples(net, rng, k=50)
        box = under_approx_box(net, sigma, support)
        if box.is_empty:
            empty += 1
            continue
        boxes += 1
        violations += int(np.sum(~satisfies_batch(net, sigma, box.sample(rng, 10000))))
    ok = violations == 0
    report(6, ok, f"{boxes} boxes, {empty} empty, {violations} violating samples")
    assert ok


def test_criterion_7_minimality():
    checked = failures = closed_failures = 0
    examples = []
    results = [(figure1_network(), infer_input_property(figure1_network(), [1, -1], CLASS0))]
    rng = np.random.default_rng(7)
    while len(results) < 60:
        net = small_net(rng)
        x = rng.uniform(-2, 2, size=net.input_dim)
        y = evaluate(net, x)
        if abs(y[0] - y[1]) < 1e-6:
            continue
        res = infer_input_property(net, x, Postcondition.prediction(int(np.argmax(y))))
        if res.proved:
            results.append((net, res))
    for net, res in results:
        for nid in res.pattern:
            checked += 1
            v = dp(net, Query(res.pattern.without([nid]), res.post))
            if not v.refuted:
                failures += 1
                # dropping a neuron below the last constrained layer leaves a non-closed pattern
                closed_failures += nid.layer == res.pattern.max_layer
                if len(examples) < 3:
                    examples.append(f"{nid} in {res.pattern}")
    ok = failures == 0
    report(7, ok, f"{len(results)} proved properties, {checked} single-neuron drops, {failures} still proved "
                  f"({closed_failures} of them keep the pattern closed)")
    assert closed_failures == 0
    assert ok, "droppable neurons: " + "; ".join(examples)


@pytest.fixture(scope="module")
def deep_net():
    rng = np.random.default_rng(1)
    net = random_network([2] + [32] * 6 + [3], rng, scale=np.sqrt(2), bias_scale=0.1,
                         domain=[[-1, 1], [-1, 1]])
    return net, rng


def test_criterion_8_distillation(deep_net):
    net, rng = deep_net
    train = Dataset(rng.uniform(-1, 1, size=(3000, 2)))
    mined = mine_layer_patterns(net, train, 2)
    proved = []
    for mp in mined[:6]:
        v = dp_layer(net, mp.pattern, mp.post, Budget(max_nodes=20000))
        if v.proved:
            mp.status = PatternStatus.PROVED
            proved.append(mp)
    table = build_rule_table(proved, 1.0)
    X = rng.uniform(-1, 1, size=(20000, 2))
    full = predicted_class(evaluate(net, X))
    test = Dataset(X, full)
    rep = benchmark(net, table, test, repeats=3)
    hit = np.zeros(len(X), dtype=bool)
    for r in table.rules:
        hit |= satisfies_batch(net, r.pattern, X)
    exact = rep.mismatches == 0 and rep.shortcuts == int(hit.sum()) and rep.shortcut_rate == hit.mean()
    empty_cls, _ = hybrid_classes(net, RuleTable(2, []), X)
    empty_rep = benchmark(net, RuleTable(2, []), test, repeats=1)
    same = np.array_equal(empty_cls, full) and empty_rep.accuracy_hybrid == empty_rep.accuracy_full

    # timing direction with rules validated on a holdout set
    holdout = Dataset(rng.uniform(-1, 1, size=(3000, 2)))
    candidates = mine_layer_patterns(net, train, 2, keep_impure=True)
    valid = [validate_empirically(net, mp, holdout, 0.9) for mp in candidates]
    fast = build_rule_table(valid, 0.9)
    big = Dataset(np.repeat(X, 5, axis=0), np.repeat(full, 5))
    timing = benchmark(net, fast, big, repeats=15)
    direction = timing.shortcut_rate >= 0.5 and timing.time_hybrid < timing.time_full
    ok = len(table.rules) > 0 and exact and same and direction
    report(8, ok, f"{len(table.rules)} proved rules, mismatches {rep.mismatches}, shortcut rate "
                  f"{rep.shortcut_rate:.4f} vs support {hit.mean():.4f}; empty table identical: {same}; "
                  f"shortcut {timing.shortcut_rate:.2f}, hybrid {timing.time_hybrid * 1e3:.1f} ms "
                  f"vs full {timing.time_full * 1e3:.1f} ms")
    assert ok


def test_criterion_9_decomposition():
    rng = np.random.default_rng(9)
    contracts = disagreements = uncovered = interp_unsound = 0
    statuses = {}
    while contracts < 60:
        net = random_network([2, 4, 4, 2], rng, domain=[[-2, 2], [-2, 2]])
        c = rng.uniform(-1.5, 1.5, size=2)
        half = rng.uniform(0.05, 0.4, size=2)
        A = Region.from_box(np.column_stack([c - half, c + half]))
        y = evaluate(net, c)
        if abs(y[0] - y[1]) < 1e-6:
            continue
        B = Postcondition.prediction(int(np.argmax(y)))
        data = Dataset(A.box[:, 0] + rng.random((200, 2)) * (A.box[:, 1] - A.box[:, 0]))
        direct = dp(net, Query(DecisionPattern(), B, A)).status
        mp, _ = select_interpolant(net, data, A, B)
        ip = prove_via_interpolant(net, A, B, mp)
        pc = prove_via_prefix_cover(net, A, B, mp, data)
        auto = prove_contract(net, A, B, data)
        contracts += 1
        statuses[direct.value] = statuses.get(direct.value, 0) + 1
        want = {Status.PROVED: PlanStatus.PROVED, Status.REFUTED: PlanStatus.REFUTED}[direct]
        disagreements += (pc.status is not want) + (auto.status is not want)
        interp_unsound += ip.status is not PlanStatus.INCOMPLETE and ip.status is not want
        P = A.box[:, 0] + rng.random((10000, 2)) * (A.box[:, 1] - A.box[:, 0])
        if pc.status is PlanStatus.PROVED:
            uncovered += int(np.sum(~pc.covers(net, P, include_interpolant=False)))
    ok = disagreements == 0 and interp_unsound == 0 and uncovered == 0
    report(9, ok, f"{contracts} contracts {statuses}, {disagreements} disagreements, "
                  f"{interp_unsound} unsound interpolant plans, {uncovered} uncovered samples")
    assert ok


def test_criterion_10_determinism(tmp_path):
    rng = np.random.default_rng(10)
    save_network(figure1_network(), tmp_path / "fig1.json")
    save_network(random_network([2, 6, 6, 2], rng, domain=[[-2, 2], [-2, 2]]), tmp_path / "r.json")
    save_pattern(WEDGE, tmp_path / "wedge.json")
    X = np.column_stack([rng.uniform(-0.5, 0.5, 300), rng.uniform(-0.5, 0.5, 300)])
    np.savetxt(tmp_path / "d.csv", X, delimiter=",")
    (tmp_path / "A.json").write_text(json.dumps({"box": [[-0.5, 0.5], [-0.5, 0.5]]}))
    commands = [
        ["verify", "--net", "fig1.json", "--pattern", "wedge.json", "--post", "class:0"],
        ["infer-input", "--net", "r.json", "--x", "0.1,0.2", "--post", "class:" + str(int(np.argmax(
            evaluate(random_network([2, 6, 6, 2], np.random.default_rng(10)), [0.1, 0.2]))))],
        ["mine-layer", "--net", "r.json", "--data", "d.csv", "--layer", "2", "--prove"],
        ["decompose", "--net", "r.json", "--A", "A.json", "--B", "class:0", "--data", "d.csv", "--method", "prefix"],
        ["decompose", "--net", "r.json", "--A", "A.json", "--B", "class:1", "--data", "d.csv"],
        ["oracle-check", "--trials", "20"],
    ]
    differ = []
    for k, cmd in enumerate(commands):
        outs = []
        for jobs in ("1", "2", "4"):
            out = tmp_path / f"out{k}_{jobs}.json"
            args = [a if not a.endswith((".json", ".csv")) else str(tmp_path / a) for a in cmd]
            main(args + ["--seed", "42", "--jobs", jobs, "--out", str(out)])
            outs.append(out.read_bytes())
        if len(set(outs)) != 1:
            differ.append(cmd[0])
    ok = not differ
    report(10, ok, f"{len(commands)} commands x 3 job settings, differing: {differ or 'none'}")
    assert ok
