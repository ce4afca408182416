"""Smoke test for the pygrowclusters extension.

Build and install first:
    pip install maturin
    maturin build --release -m crates/python/Cargo.toml
    pip install target/wheels/pygrowclusters-*.whl
"""

import math

import pygrowclusters as gc


def main():
    p = gc.dp_means([[0.0], [10.0]], 4.0, max_clusters=10)
    assert p.k == 2 and p.labels == [0, 1], p
    assert math.isclose(p.objective, 8.0)
    assert math.isclose(gc.objective([[0.0], [10.0]], [0, 0], 4.0), 54.0)
    assert p.predict([[1.0], [9.0]]) == [0, 1]

    pts = [[0.0], [1.0], [5.0], [6.0]]
    # {0,1} vs {5,6}: a = 1 everywhere, b = 5.5 for the outer points, 4.5 for the inner ones
    expected = (2 * (1 - 1 / 5.5) + 2 * (1 - 1 / 4.5)) / 4
    assert math.isclose(gc.silhouette(pts, [0, 0, 1, 1]), expected)
    assert gc.silhouette(pts, [0, 0, 0, 0]) is None
    assert gc.calinski_harabasz([[0.0], [0.0], [3.0], [3.0]], [0, 0, 1, 1]) == math.inf

    rows, truth = gc.gen_blobs(k=3, n=50, dim=4, sep=8.0, sigma=1.0, seed=42)
    for method in ("cv", "sil", "ch"):
        report = gc.select_lambda(rows, method, [1.0 + i * 49.0 / 24 for i in range(25)], seed=0)
        assert report.chosen_k == 3, (method, report)
        assert gc.adjusted_rand_index(report.partition.labels, truth) > 0.99

    hp = gc.hdp_means([[0.0], [0.1], [10.0], [0.2], [10.1]], ["a", "a", "a", "b", "b"], 1.0, 5.0)
    assert hp.k_global == 2 and hp.n_local == 4, hp

    coords, eig, kept = gc.isomap([[float(i), 0.0] for i in range(5)], neighbors=1, dim=1)
    assert [round(abs(c[0]), 9) for c in coords] == [2.0, 1.0, 0.0, 1.0, 2.0]
    assert len(kept) == 5 and eig[0] > 0

    docs, topics, stop = gc.gen_corpus()
    ids, terms, raw = gc.encode(docs, "raw", stop)
    _, _, binary = gc.encode(docs, "binary", stop)
    assert len(ids) == 60 and not set(stop) & set(terms)
    assert all(b == min(r, 1) for rr, bb in zip(raw, binary) for r, b in zip(rr, bb))

    try:
        gc.dp_means([[0.0]], -1.0)
    except ValueError as e:
        assert "lambda" in str(e)
    else:
        raise AssertionError("negative lambda accepted")

    print("python smoke test: ok")


if __name__ == "__main__":
    main()
