import numpy as np

from relupat import Dataset, DecisionPattern, Postcondition
from relupat.mine import (MinedPattern, PatternStatus, grow_tree, mine_layer_patterns, prove_pattern,
                          refine_with_counterexample, validate_empirically)
from relupat.model import random_network
from relupat.pattern import satisfies_batch, support
from relupat.verify import dp_layer

from conftest import FIG4A

CLASS0 = Postcondition.prediction(0)


def test_fig4_tree(fig1, wedge):
    mined = mine_layer_patterns(fig1, Dataset(FIG4A), 1, CLASS0)
    top = mined[0]
    assert top.pattern == wedge
    assert top.support.count == 2 and top.support.purity == 1.0


def test_perfect_split():
    F = np.array([[1, 0], [1, 1], [0, 1], [0, 0]], dtype=bool)
    tree = grow_tree(F, np.array([1, 1, 0, 0]))
    assert tree.feature == 0 and tree.on.is_leaf and tree.off.is_leaf


def test_single_class_gives_empty_pattern(fig1):
    X = np.array([[1.0, -1.0], [0.0, -1.0]])
    mined = mine_layer_patterns(fig1, Dataset(X), 1, CLASS0)
    assert len(mined) == 1 and mined[0].pattern == DecisionPattern()


def test_multiclass_patterns_pure_and_exclusive(rng):
    net = random_network([2, 3, 3, 2], rng)
    data = Dataset(rng.normal(size=(500, 2)))
    mined = mine_layer_patterns(net, data, 2)
    counts = [mp.support.count for mp in mined]
    assert counts == sorted(counts, reverse=True)
    hits = np.zeros(500, dtype=int)
    for mp in mined:
        assert support(net, mp.pattern, data, mp.post).purity == 1.0
        hits += satisfies_batch(net, mp.pattern, data.inputs)
    assert hits.max() <= 1


def test_validate_empirically(fig1, wedge, rng):
    X = rng.uniform(-4, 4, size=(2000, 2))
    X = X[(X[:, 0] - X[:, 1] > 0) & (X.sum(axis=1) <= 0)][:100]
    mp = MinedPattern(1, wedge, 0, CLASS0, support(fig1, wedge, Dataset(FIG4A), CLASS0))
    out = validate_empirically(fig1, mp, Dataset(X), 0.98)
    assert out.validated_accuracy == 1.0 and out.status is PatternStatus.EMPIRICALLY_VALID
    none = validate_empirically(fig1, mp, Dataset(np.array([[4.0, 3.0]])), 0.98)
    assert none.status is PatternStatus.CANDIDATE and none.validated_accuracy is None


def test_refinement_strengthens(fig1):
    # {N2,0:on} alone already implies class 0, so start from {N2,1:off}
    assert dp_layer(fig1, DecisionPattern({(2, 0): True}), CLASS0).proved
    weak = DecisionPattern({(2, 1): False})
    v = dp_layer(fig1, weak, CLASS0)
    assert v.refuted
    sup = np.array([[1.0, -1.0], [0.0, -1.0]])
    mp = MinedPattern(2, weak, 0, CLASS0, support(fig1, weak, Dataset(sup), CLASS0))
    out = refine_with_counterexample(fig1, mp, v.counterexample, sup)
    assert out.status is PatternStatus.PROVED
    assert out.pattern == DecisionPattern({(2, 0): True, (2, 1): False})
    assert weak.issubset(out.pattern)


def test_empty_supporters_discard(fig1):
    weak = DecisionPattern({(2, 0): True})
    mp = MinedPattern(2, weak, 0, CLASS0, support(fig1, weak, Dataset(FIG4A), CLASS0))
    assert refine_with_counterexample(fig1, mp, None, []).status is PatternStatus.DISCARDED


def test_prove_pattern(fig1, wedge):
    mp = MinedPattern(1, wedge, 0, CLASS0, support(fig1, wedge, Dataset(FIG4A), CLASS0))
    assert prove_pattern(fig1, mp, Dataset(FIG4A)).status is PatternStatus.PROVED
