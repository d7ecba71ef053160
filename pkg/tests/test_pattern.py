import numpy as np
import pytest

from relupat import Dataset, DecisionPattern, Postcondition
from relupat.model import NeuronId, activation_signature, random_network
from relupat.pattern import (closed_through, is_closed, load_pattern, prefix_extension, satisfies,
                             satisfies_batch, save_pattern, support)

from conftest import FIG4A


def test_satisfies_fig4a(fig1, wedge):
    assert satisfies(fig1, wedge, [1, -1])
    assert not satisfies(fig1, wedge, [4, 3])
    assert satisfies(fig1, DecisionPattern(), [4, 3])


def test_support_fig4a(fig1, wedge):
    data = Dataset(FIG4A)
    st = support(fig1, wedge, data, Postcondition.prediction(0))
    assert st.count == 2 and st.purity == 1.0
    assert sorted(st.satisfying_indices) == [0, 4]
    st = support(fig1, DecisionPattern({(1, 0): "off", (1, 1): "on"}), data, Postcondition.prediction(0))
    assert st.count == 1 and st.purity == 0.0


def test_closedness(fig1, wedge):
    assert is_closed(fig1, wedge)
    assert is_closed(fig1, DecisionPattern())
    assert not is_closed(fig1, DecisionPattern({(2, 0): True}))
    assert is_closed(fig1, wedge.union({(2, 1): False}))
    assert closed_through(fig1, wedge) == 1


def test_union_conflict(wedge):
    with pytest.raises(ValueError):
        wedge.union({(1, 0): False})


def test_validate_rejects_bad_neuron(fig1):
    with pytest.raises(KeyError):
        DecisionPattern({(3, 0): True}).validate(fig1)
    with pytest.raises(KeyError):
        DecisionPattern({(1, 5): True}).validate(fig1)


def test_json_round_trip(tmp_path, wedge):
    p = tmp_path / "w.json"
    save_pattern(wedge, p)
    assert load_pattern(p) == wedge
    assert DecisionPattern.from_json(wedge.to_json()) == wedge


def test_signature_satisfies_itself(rng):
    net = random_network([3, 4, 4, 2], rng)
    X = rng.normal(size=(200, 3))
    for x in X[:20]:
        sig = activation_signature(net, x)
        assert satisfies(net, sig, x)
        assert satisfies(net, sig.restrict([1]), x)
    assert satisfies_batch(net, DecisionPattern(), X).all()


def test_prefix_extension(fig1):
    sigma2 = DecisionPattern({(2, 0): True, (2, 1): False})
    p = prefix_extension(fig1, sigma2, [1, -1])
    assert p.layer(1) == DecisionPattern({(1, 0): True, (1, 1): False})
    assert p.layer(2) == sigma2
