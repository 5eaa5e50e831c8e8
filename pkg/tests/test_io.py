import json

import numpy as np
import pytest

from coarse_ricci import euclidean_space, graph_generator, wasserstein
from coarse_ricci import io as rio
from coarse_ricci.exceptions import InputError


def test_edge_list(tmp_path):
    p = tmp_path / "g.tsv"
    p.write_text("# comment\na b\nb\tc 2.5\n\n")
    assert rio.read_edge_list(p) == [("a", "b", 1.0), ("b", "c", 2.5)]
    p.write_text("a b c d\n")
    with pytest.raises(InputError):
        rio.read_edge_list(p)
    p.write_text("a b x\n")
    with pytest.raises(InputError):
        rio.read_edge_list(p)


def test_matrix_with_header(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("a,b\n0,1\n1,0\n")
    np.testing.assert_array_equal(rio.read_matrix_csv(p), [[0, 1], [1, 0]])
    p.write_text("0,1\n1\n")
    with pytest.raises(InputError):
        rio.read_matrix_csv(p)


def test_point_cloud_roundtrip(tmp_path):
    X = np.random.default_rng(0).normal(size=(7, 3))
    p = tmp_path / "c.csv"
    rio.write_point_cloud_csv(p, X)
    np.testing.assert_array_equal(rio.read_point_cloud_csv(p), X)
    (tmp_path / "e.csv").write_text("")
    assert rio.read_point_cloud_csv(tmp_path / "e.csv").shape[0] == 0


@pytest.mark.parametrize("sparse", [False, True])
def test_generator_roundtrip(tmp_path, cycle4, sparse):
    L, _ = cycle4
    p = tmp_path / "L.txt"
    rio.write_generator(p, L, sparse=sparse)
    np.testing.assert_array_equal(rio.read_generator(p).toarray(), L.toarray())


def test_measure_csv(tmp_path, triangle):
    _, S = triangle
    p = tmp_path / "mu.csv"
    p.write_text("point,weight\na,0.25\n2,0.75\n")
    np.testing.assert_allclose(rio.read_measure_csv(p, S), [0.25, 0.0, 0.75])
    p.write_text("zz,1\n")
    with pytest.raises(InputError):
        rio.read_measure_csv(p, S)


def test_plan_and_reports(tmp_path):
    S = euclidean_space([[0.0], [1.0]])
    _, plan = wasserstein(S, [1.0, 0.0], [0.0, 1.0])
    rio.write_plan(tmp_path / "plan.txt", plan)
    assert (tmp_path / "plan.txt").read_text().splitlines()[1] == "0 1 1.0"
    rio.dump_json(tmp_path / "r.json", {"v": np.float64(1.5), "a": np.arange(2)})
    assert json.loads((tmp_path / "r.json").read_text()) == {"v": 1.5, "a": [0, 1]}
    rio.dump_csv(tmp_path / "r.csv", [{"x": 1, "y": np.float64(0.5)}], ["x", "y"], {"k": 1})
    assert (tmp_path / "r.csv").read_text().splitlines() == ["# k: 1", "x,y", "1,0.5"]
