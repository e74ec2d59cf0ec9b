import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pcurvature import cli
from pcurvature.diffop import RatMat
from pcurvature.pcurv import katz_recurrence
from pcurvature.polsol import SolutionSpace

from conftest import random_op


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out.strip(), out.err.strip()


def test_pcurv_text(capsys):
    code, out, _ = run(["pcurv", "-p", "3", "D^2 - x"], capsys)
    assert code == 0 and out == "[[1, x^2], [x, 2]]"
    code, out, _ = run(["pcurv-naive", "-p", "3", "D^2 - x"], capsys)
    assert code == 0 and out == "[[1, x^2], [x, 2]]"
    code, out, _ = run(["pcurv", "-p", "5", "x*D - 1"], capsys)
    assert code == 0 and out == "0"


def test_other_commands(capsys):
    assert run(["nilpotent", "-p", "5", "D^2"], capsys)[:2] == (0, "true")
    assert run(["exists", "-p", "5", "D - 1"], capsys)[:2] == (0, "dimension 0")
    code, out, _ = run(["polsols", "-p", "5", "x*D - 1"], capsys)
    assert code == 0 and out.splitlines() == ["dimension 1", "x"]
    code, out, _ = run(["ratdim", "-p", "3", "D^2"], capsys)
    assert out.splitlines() == ["dimension 2", "1", "x"]
    assert run(["trace", "-p", "7", "D^2 + D"], capsys)[:2] == (0, "6")


@pytest.mark.parametrize("cmd", ["pcurv", "pcurv-naive", "polsols", "exists", "ratdim", "trace", "nilpotent"])
def test_check_oracle(cmd, capsys):
    code, out, _ = run([cmd, "-p", "7", "--check-oracle", "(x+2)*D^2 + x^2*D + 1"], capsys)
    assert code == 0 and out.endswith("oracle: MATCH")


def test_oracle_skipped_for_large_p(capsys):
    code, out, _ = run(["exists", "-p", "101", "--check-oracle", "D^2 + x"], capsys)
    assert code == 0 and "skipped" in out


def test_exit_codes(capsys):
    assert run(["pcurv", "-p", "8", "D"], capsys)[0] == 2
    assert run(["pcurv", "-p", "2", "D"], capsys)[0] == 2
    code, _, err = run(["pcurv", "-p", "5", "D +* x"], capsys)
    assert code == 2 and "^" in err
    # l_r = x^5 - x vanishes on all of F_5
    code, _, err = run(["pcurv", "-p", "5", "(x^5 - x)*D + 1"], capsys)
    assert code == 3 and "precondition" in err
    code, _, err = run(["trace", "-p", "5", "D^3"], capsys)
    assert code == 3
    with pytest.raises(SystemExit) as ei:
        cli.main(["pcurv", "D"])
    assert ei.value.code == 2


def test_is_prime():
    small = [n for n in range(200) if cli.is_prime(n)]
    assert small == [n for n in range(2, 200) if all(n % q for q in range(2, n))]
    assert cli.is_prime(2147483647) and not cli.is_prime(2147483647 * 3)
    assert not cli.is_prime(25326001)  # strong pseudoprime to bases 2, 3, 5


def test_json_output(capsys):
    code, out, _ = run(["pcurv", "-p", "3", "--json", "--check-oracle", "D^2 - x"], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["oracle"] == "match"
    assert doc["bidegree"] == [1, 2] and doc["shift"] == 0
    A = cli.result_from_json(doc["result"])
    assert A == katz_recurrence(cli.parse_operator("D^2 - x", 3))
    doc = json.loads(run(["exists", "-p", "5", "--json", "x*D - 1"], capsys)[1])
    assert doc["result"] == {"kind": "int", "value": 1} and doc["shift"] == 1


@given(st.sampled_from([3, 5, 7, 101]), st.integers(1, 3), st.integers(0, 3), st.integers(0, 2**31))
def test_json_round_trip(p, r, d, seed):
    rng = np.random.default_rng(seed)
    A = katz_recurrence(random_op(rng, r, d, p))
    back = cli.result_from_json(json.loads(json.dumps(cli.result_to_json("ratmat", A))))
    assert isinstance(back, RatMat) and back == A
    S = SolutionSpace(2, [np.array([1, 2], dtype=np.int64), np.array([0, 0, 1], dtype=np.int64)], 9, p)
    T = cli.result_from_json(json.loads(json.dumps(cli.result_to_json("space", S))))
    assert T.dimension == 2 and [u.tolist() for u in T.basis] == [[1, 2], [0, 0, 1]]
    assert cli.result_from_json(cli.result_to_json("bool", True)) is True


def test_bench_csv(tmp_path, capsys):
    out = tmp_path / "bench.csv"
    code = cli.main(["bench", "--bench-sizes", "11,13", "--bench-commands", "pcurv,exists", "--out", str(out),
                     "D^2 + x*D + 1"])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "command,p,d,r,ms"
    assert [ln.split(",")[:4] for ln in lines[1:]] == [["pcurv", "11", "1", "2"], ["exists", "11", "1", "2"],
                                                       ["pcurv", "13", "1", "2"], ["exists", "13", "1", "2"]]
    assert all(float(ln.split(",")[4]) >= 0 for ln in lines[1:])
    assert run(["bench", "--bench-sizes", "12", "D"], capsys)[0] == 2
