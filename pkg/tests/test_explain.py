import numpy as np
import pytest

from relupat import DecisionPattern
from relupat.explain import format_box, minimal_assignment, under_approx_box
from relupat.lp import Box
from relupat.model import activation_signature, random_network
from relupat.pattern import satisfies_batch


def test_wedge_box_from_supports(fig1, wedge, rng):
    box = under_approx_box(fig1, wedge, np.array([[1.0, -1.0], [0.0, -1.0]]))
    assert not box.is_empty
    assert satisfies_batch(fig1, wedge, box.sample(rng, 10000)).all()


def test_open_pattern_rejected(fig1):
    with pytest.raises(ValueError):
        under_approx_box(fig1, DecisionPattern({(2, 0): True}), np.zeros((1, 2)))


def test_format_box():
    box = Box(np.array([0.0, 1.0]), np.array([2.0, 1.0]))
    assert format_box(box, ["a", "b"]) == "0 ≤ a ≤ 2, b = 1"


def test_minimal_assignment_fig1(fig1, wedge):
    res = minimal_assignment(fig1, wedge, [1.0, -1.0], domain=[[-4, 4], [-4, 4]])
    assert res.fixed == {0: 1.0, 1: -1.0} and res.free == [] and res.dp_calls == 2


def test_minimal_assignment_frees_irrelevant_coordinate():
    from relupat.model import Network
    # the only hidden neuron reads x0; x1 never matters
    net = Network([[[1.0, 0.0]], [[1.0], [-1.0]]], [[0.0], [0.0, 0.0]], [[-1, 1], [-1, 1]])
    sigma = DecisionPattern({(1, 0): True})
    res = minimal_assignment(net, sigma, [0.5, 0.3])
    assert res.free == [1] and res.fixed == {0: 0.5}


def test_random_boxes_sound(rng):
    for _ in range(10):
        net = random_network([2, 4, 3, 2], rng, domain=[[-2, 2], [-2, 2]])
        X = rng.uniform(-2, 2, size=(50, 2))
        sig = activation_signature(net, X[0]).restrict([1])
        box = under_approx_box(net, sig, X[satisfies_batch(net, sig, X)])
        if not box.is_empty:
            assert satisfies_batch(net, sig, box.sample(rng, 2000)).all()
