import json

import numpy as np
import pytest

from relupat import DecisionPattern, figure1_network, save_network
from relupat.cli import main
from relupat.mine import MinedPattern
from relupat.pattern import load_pattern, save_pattern
from relupat.verify import Region


@pytest.fixture
def files(tmp_path):
    save_network(figure1_network(), tmp_path / "fig1.json")
    save_pattern(DecisionPattern({(1, 0): True, (1, 1): False}), tmp_path / "wedge.json")
    save_pattern(DecisionPattern({(1, 0): False, (1, 1): True}), tmp_path / "flipped.json")
    rng = np.random.default_rng(0)
    X = np.column_stack([rng.uniform(1, 2, 60), rng.uniform(-3, -2.5, 60)])
    np.savetxt(tmp_path / "a.csv", X, delimiter=",")
    (tmp_path / "A.json").write_text(json.dumps({"box": [[1, 2], [-3, -2.5]]}))
    return tmp_path


def test_eval(files, capsys):
    assert main(["eval", "--net", str(files / "fig1.json"), "--x", "1,-1"]) == 0
    assert capsys.readouterr().out.strip() == "[1, -1]"


def test_verify_exit_codes(files):
    net = str(files / "fig1.json")
    assert main(["verify", "--net", net, "--pattern", str(files / "wedge.json"), "--post", "class:0"]) == 0
    out = files / "cex.json"
    assert main(["verify", "--net", net, "--pattern", str(files / "flipped.json"), "--post", "class:0",
                 "--out", str(out)]) == 1
    doc = json.loads(out.read_text())
    assert doc["status"] == "refuted" and len(doc["counterexample"]) == 2


def test_usage_and_io_errors(files):
    assert main(["verify", "--net", str(files / "missing.json")]) == 2
    assert main(["verify", "--bogus"]) == 2
    assert main(["nosuch"]) == 2
    (files / "bad.json").write_text("{not json")
    assert main(["eval", "--net", str(files / "bad.json"), "--x", "1,1"]) == 2
    assert main(["verify", "--net", str(files / "fig1.json"), "--pattern", str(files / "wedge.json"),
                 "--post", "class:0", "--eps", "0.5"]) == 2


def test_signature_round_trip(files):
    out = files / "sig.json"
    assert main(["signature", "--net", str(files / "fig1.json"), "--x", "1,-1", "--out", str(out)]) == 0
    text = out.read_text()
    sigma = load_pattern(out)
    assert json.dumps(sigma.to_json(), indent=2, sort_keys=True) + "\n" == text


def test_mine_layer_round_trip(files):
    out = files / "mined.json"
    assert main(["mine-layer", "--net", str(files / "fig1.json"), "--data", str(files / "a.csv"),
                 "--layer", "1", "--post", "class:0", "--prove", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    back = [MinedPattern.from_dict(d).to_dict() for d in doc]
    assert [{k: d[k] for k in ("pattern", "status", "layer")} for d in back] == \
           [{k: d[k] for k in ("pattern", "status", "layer")} for d in doc]


def test_infer_input(files):
    out = files / "prop.json"
    assert main(["infer-input", "--net", str(files / "fig1.json"), "--input", "1,-1", "--post", "class:0",
                 "--out", str(out)]) == 0
    assert json.loads(out.read_text())["critical_layer"] == 1


def test_decompose_and_jobs(files):
    outs = []
    for jobs in ("1", "3"):
        out = files / f"plan{jobs}.json"
        rc = main(["decompose", "--net", str(files / "fig1.json"), "--A", str(files / "A.json"),
                   "--B", "class:0", "--data", str(files / "a.csv"), "--method", "prefix",
                   "--jobs", jobs, "--out", str(out)])
        assert rc == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    Region.from_dict(json.loads(outs[0])["A"])


def test_box_and_minassign(files):
    net = str(files / "fig1.json")
    assert main(["box", "--net", net, "--pattern", str(files / "wedge.json"),
                 "--support", str(files / "a.csv"), "--out", str(files / "box.json")]) == 0
    (files / "dom.json").write_text("[[-4, 4], [-4, 4]]")
    out = files / "ma.json"
    assert main(["minassign", "--net", net, "--pattern", str(files / "wedge.json"), "--x", "1,-1",
                 "--domain", str(files / "dom.json"), "--out", str(out)]) == 0
    assert json.loads(out.read_text())["free"] == []


def test_oracle_check_refuses_large(tmp_path):
    from relupat.model import random_network
    save_network(random_network([2, 10, 10, 2], 0), tmp_path / "big.json")
    assert main(["oracle-check", "--net", str(tmp_path / "big.json")]) == 2
