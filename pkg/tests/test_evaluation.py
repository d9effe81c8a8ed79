import itertools
import json
import math
import os

import numpy as np
import pytest

from dmage.evaluation import (
    ClusteringReport,
    LinkPredReport,
    auc_ap,
    cluster_eval,
    clustering_metrics,
    edge_score,
    edge_scores,
    kmeans,
    linkpred_eval,
    linkpred_split,
    write_report,
    write_split,
)
from dmage.similarity import t_kernel
from dmage.synthetic import two_block_sbm
from dmage.training import TrainConfig


def blobs(rng, k=3, per=15, sep=20.0, dim=2):
    """Well-separated Gaussian clusters with known membership."""
    centers = rng.standard_normal((k, dim)) * sep
    Z = np.concatenate([c + rng.standard_normal((per, dim)) for c in centers])
    truth = np.repeat(np.arange(k), per)
    return Z, truth


def inertia_of(Z, assign):
    total = 0.0
    for c in np.unique(assign):
        members = Z[assign == c]
        total += ((members - members.mean(axis=0)) ** 2).sum()
    return total


def acc_oracle(pred, truth):
    """Best accuracy over all injective cluster-to-class mappings."""
    clusters = sorted(set(pred))
    classes = sorted(set(truth))
    k = max(len(clusters), len(classes))
    best = 0
    for perm in itertools.permutations(range(k)):
        correct = 0
        for ci, c in enumerate(clusters):
            if ci < len(perm) and perm[ci] < len(classes):
                lab = classes[perm[ci]]
                correct += sum(1 for p, t in zip(pred, truth) if p == c and t == lab)
        best = max(best, correct)
    return best / len(pred)


def nmi_oracle(pred, truth):
    n = len(pred)
    clusters, classes = sorted(set(pred)), sorted(set(truth))
    mi = 0.0
    for c in clusters:
        nc = sum(1 for p in pred if p == c)
        for lab in classes:
            nl = sum(1 for t in truth if t == lab)
            ncl = sum(1 for p, t in zip(pred, truth) if p == c and t == lab)
            if ncl:
                mi += ncl / n * math.log(n * ncl / (nc * nl))
    def ent(values, domain):
        out = 0.0
        for lab in domain:
            p = sum(1 for v in values if v == lab) / n
            if p:
                out -= p * math.log(p)
        return out
    hp, ht = ent(pred, clusters), ent(truth, classes)
    if hp == 0.0 and ht == 0.0:
        return 1.0
    denom = (hp + ht) / 2
    return mi / denom if denom else 0.0


def auc_oracle(pos, neg):
    wins = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                wins += 1.0
            elif p == q:
                wins += 0.5
    return wins / (len(pos) * len(neg))


def ap_oracle(pos, neg):
    """Step AP over descending thresholds; tied scores enter together."""
    items = [(s, 1) for s in pos] + [(s, 0) for s in neg]
    ap, prev_recall = 0.0, 0.0
    for t in sorted({s for s, _ in items}, reverse=True):
        sel = [lab for s, lab in items if s >= t]
        tp = sum(sel)
        recall = tp / len(pos)
        ap += (recall - prev_recall) * (tp / len(sel))
        prev_recall = recall
    return ap


class TestKmeans:
    def test_recovers_separated_blobs(self):
        Z, truth = blobs(np.random.default_rng(0))
        assign = kmeans(Z, 3, seed=0)
        assert acc_oracle(assign.tolist(), truth.tolist()) == 1.0

    def test_deterministic(self):
        Z, _ = blobs(np.random.default_rng(1))
        assert np.array_equal(kmeans(Z, 3, seed=5), kmeans(Z, 3, seed=5))

    def test_k_equals_n(self):
        Z = np.random.default_rng(2).standard_normal((6, 2))
        assign = kmeans(Z, 6, seed=0)
        assert sorted(assign.tolist()) == list(range(6))
        assert inertia_of(Z, assign) == 0.0

    def test_k_one(self):
        Z = np.random.default_rng(3).standard_normal((8, 2))
        assert np.array_equal(kmeans(Z, 1, seed=0), np.zeros(8, dtype=int))

    def test_restarts_never_hurt(self):
        Z, _ = blobs(np.random.default_rng(4), k=4, per=8, sep=3.0)
        one = inertia_of(Z, kmeans(Z, 4, seed=0, restarts=1))
        ten = inertia_of(Z, kmeans(Z, 4, seed=0, restarts=10))
        assert ten <= one + 1e-9

    def test_duplicate_points_stay_valid(self):
        # only two distinct locations but three clusters: exercises the
        # empty-cluster reseeding path
        Z = np.concatenate([np.zeros((10, 2)), np.ones((1, 2))])
        for seed in range(5):
            assign = kmeans(Z, 3, seed=seed)
            assert assign.shape == (11,)
            assert set(assign.tolist()) <= {0, 1, 2}

    def test_all_identical_points(self):
        Z = np.ones((5, 3))
        assign = kmeans(Z, 2, seed=0)
        assert set(assign.tolist()) <= {0, 1}

    @pytest.mark.parametrize("k", [0, 7])
    def test_k_out_of_range(self, k):
        with pytest.raises(ValueError):
            kmeans(np.zeros((6, 2)), k)


class TestClusteringMetrics:
    def test_perfect_assignment(self):
        truth = np.array([0, 0, 1, 1, 2, 2])
        rep = clustering_metrics(np.array([2, 2, 0, 0, 1, 1]), truth)
        assert (rep.acc, rep.nmi, rep.f1) == (1.0, 1.0, 1.0)

    def test_matches_brute_force_on_fixed_case(self):
        # 10 points, two deliberate mistakes
        truth = [0, 0, 0, 1, 1, 1, 2, 2, 2, 2]
        pred = [1, 1, 2, 2, 2, 2, 0, 0, 0, 1]
        rep = clustering_metrics(np.array(pred), np.array(truth))
        assert rep.acc == pytest.approx(acc_oracle(pred, truth), rel=1e-12)
        assert rep.nmi == pytest.approx(nmi_oracle(pred, truth), rel=1e-12)

    def test_random_cases_match_oracles(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            n = int(rng.integers(4, 12))
            pred = rng.integers(0, 3, n)
            truth = rng.integers(0, 3, n)
            rep = clustering_metrics(pred, truth)
            assert rep.acc == pytest.approx(acc_oracle(pred.tolist(), truth.tolist()), rel=1e-12)
            assert rep.nmi == pytest.approx(nmi_oracle(pred.tolist(), truth.tolist()), abs=1e-12)

    def test_cluster_relabeling_invariance(self):
        rng = np.random.default_rng(6)
        pred = rng.integers(0, 3, 30)
        truth = rng.integers(0, 3, 30)
        base = clustering_metrics(pred, truth)
        relabeled = np.array([10, 20, 30])[pred]  # arbitrary distinct ids
        rep = clustering_metrics(relabeled, truth)
        assert (rep.acc, rep.nmi, rep.f1) == (base.acc, base.nmi, base.f1)

    def test_arbitrary_truth_label_values(self):
        truth = np.array([5, 5, 9, 9])
        rep = clustering_metrics(np.array([0, 0, 1, 1]), truth)
        assert rep.acc == 1.0

    def test_nmi_symmetric(self):
        rng = np.random.default_rng(7)
        a = rng.integers(0, 3, 40)
        b = rng.integers(0, 4, 40)
        assert clustering_metrics(a, b).nmi == pytest.approx(
            clustering_metrics(b, a).nmi, rel=1e-12
        )

    def test_constant_vs_constant_nmi(self):
        rep = clustering_metrics(np.zeros(5, int), np.ones(5, int) * 3)
        assert rep.nmi == 1.0
        assert rep.acc == 1.0

    def test_constant_vs_split_nmi_zero(self):
        rep = clustering_metrics(np.zeros(6, int), np.array([0, 0, 0, 1, 1, 1]))
        assert rep.nmi == 0.0

    def test_extra_clusters_reduce_acc(self):
        truth = np.array([0, 0, 0, 0])
        pred = np.array([0, 0, 1, 2])  # two clusters cannot match any class
        rep = clustering_metrics(pred, truth)
        assert rep.acc == 0.5

    def test_micro_f1_equals_acc(self):
        rng = np.random.default_rng(8)
        pred = rng.integers(0, 4, 50)
        truth = rng.integers(0, 3, 50)
        rep = clustering_metrics(pred, truth, f1_variant="micro")
        assert rep.f1 == pytest.approx(rep.acc, rel=1e-12)

    def test_input_validation(self):
        with pytest.raises(ValueError):
            clustering_metrics(np.zeros(3, int), np.zeros(4, int))
        with pytest.raises(ValueError):
            clustering_metrics(np.zeros(1, int), np.zeros(1, int))
        with pytest.raises(ValueError):
            clustering_metrics(np.zeros(4, int), np.zeros(4, int), f1_variant="weighted")

    def test_cluster_eval_on_trained_embeddings(self, sbm_graph, sbm_result):
        reports = cluster_eval(sbm_result.embeddings, sbm_graph.labels, [0, 1])
        assert [r.seed for r in reports] == [0, 1]
        assert all(r.acc >= 0.9 for r in reports)


class TestLinkpredSplit:
    def graph(self, seed=0):
        return two_block_sbm(n=40, p_intra=0.4, p_inter=0.05, seed=seed)

    def test_sizes_and_partition(self):
        g = self.graph()
        s = linkpred_split(g, seed=0)
        m = g.num_edges
        assert len(s.val_edges) == int(m * 0.05)
        assert len(s.test_edges) == int(m * 0.10)
        assert len(s.val_negatives) == len(s.val_edges)
        assert len(s.test_negatives) == len(s.test_edges)
        assert s.train_edges | s.val_edges | s.test_edges == g.edges
        assert not s.train_edges & s.val_edges
        assert not s.train_edges & s.test_edges
        assert not s.val_edges & s.test_edges

    def test_negatives_are_non_edges(self):
        g = self.graph()
        s = linkpred_split(g, seed=1)
        for pair in s.val_negatives | s.test_negatives:
            assert pair not in g.edges
            assert pair[0] < pair[1]
        assert not s.val_negatives & s.test_negatives

    def test_deterministic_and_seed_sensitive(self):
        g = self.graph()
        assert linkpred_split(g, seed=3) == linkpred_split(g, seed=3)
        assert linkpred_split(g, seed=3) != linkpred_split(g, seed=4)

    def test_too_few_edges(self):
        g = two_block_sbm(n=10, p_intra=0.2, p_inter=0.0, seed=0)
        assert g.num_edges < 20
        with pytest.raises(ValueError, match="at least 20"):
            linkpred_split(g)

    def test_too_few_non_edges(self):
        from dmage.graph import AttributedGraph

        n = 8
        edges = frozenset(
            (i, j) for i in range(n) for j in range(i + 1, n)
        )
        g = AttributedGraph(n, edges, np.zeros((n, 2)), None)
        with pytest.raises(ValueError, match="non-edges"):
            linkpred_split(g)

    def test_write_split_round_trips(self, tmp_path):
        g = self.graph()
        s = linkpred_split(g, seed=0)
        write_split(str(tmp_path / "split"), s)
        names = sorted(os.listdir(tmp_path / "split"))
        assert names == [
            "test_edges.tsv",
            "test_negatives.tsv",
            "train_edges.tsv",
            "val_edges.tsv",
            "val_negatives.tsv",
        ]
        got = set()
        with open(tmp_path / "split" / "test_edges.tsv") as f:
            for line in f:
                i, j = line.split()
                got.add((int(i), int(j)))
        assert got == set(s.test_edges)


class TestEdgeScores:
    def test_t_kernel_scores(self):
        Z = np.array([[0.0, 0.0], [0.0, 0.0], [3.0, 4.0]])
        assert edge_score(Z, 0, 1) == pytest.approx(t_kernel(0.0, 1.0), rel=1e-12)
        assert edge_score(Z, 0, 2) == pytest.approx(t_kernel(5.0, 1.0), rel=1e-12)

    def test_t_kernel_monotone_in_distance(self):
        Z = np.array([[0.0], [1.0], [2.0], [5.0]])
        s = edge_scores(Z, [(0, 1), (0, 2), (0, 3)])
        assert s[0] > s[1] > s[2]

    def test_cosine_geometry(self):
        Z = np.array([[1.0, 0.0], [2.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
        s = edge_scores(Z, [(0, 1), (0, 2), (0, 3), (0, 4)], scorer="cosine")
        assert s[0] == pytest.approx(1.0)
        assert s[1] == pytest.approx(-1.0)
        assert s[2] == pytest.approx(0.0)
        assert s[3] == 0.0  # zero-norm endpoint

    def test_empty_pairs(self):
        assert edge_scores(np.zeros((3, 2)), []).size == 0

    def test_unknown_scorer(self):
        with pytest.raises(ValueError, match="scorer"):
            edge_scores(np.zeros((3, 2)), [(0, 1)], scorer="dot")


class TestAucAp:
    def test_perfect_separation(self):
        auc, ap = auc_ap([0.9, 0.8, 0.7], [0.3, 0.2, 0.1])
        assert auc == 1.0
        assert ap == 1.0

    def test_reversed_separation(self):
        auc, _ = auc_ap([0.1, 0.2], [0.8, 0.9])
        assert auc == 0.0

    def test_all_tied(self):
        auc, ap = auc_ap([0.5, 0.5], [0.5, 0.5, 0.5])
        assert auc == 0.5
        assert ap == pytest.approx(2 / 5)

    def test_matches_pairwise_oracle(self):
        rng = np.random.default_rng(9)
        for _ in range(20):
            pos = rng.integers(0, 6, rng.integers(2, 10)) / 5.0  # coarse → ties
            neg = rng.integers(0, 6, rng.integers(2, 10)) / 5.0
            auc, ap = auc_ap(pos, neg)
            assert auc == pytest.approx(auc_oracle(pos.tolist(), neg.tolist()), rel=1e-12)
            assert ap == pytest.approx(ap_oracle(pos.tolist(), neg.tolist()), rel=1e-12)

    def test_continuous_scores_match_oracle(self):
        rng = np.random.default_rng(10)
        pos = (rng.standard_normal(15) + 0.5).tolist()
        neg = rng.standard_normal(12).tolist()
        auc, ap = auc_ap(pos, neg)
        assert auc == pytest.approx(auc_oracle(pos, neg), rel=1e-12)
        assert ap == pytest.approx(ap_oracle(pos, neg), rel=1e-12)

    def test_empty_side_rejected(self):
        with pytest.raises(ValueError):
            auc_ap([], [0.1])
        with pytest.raises(ValueError):
            auc_ap([0.1], [])


class TestLinkpredEval:
    def test_end_to_end_reports_and_splits(self, tmp_path):
        g = two_block_sbm(n=40, p_intra=0.4, p_inter=0.05, seed=0)
        cfg = TrainConfig(epochs=5, hidden_dims=(16, 8), latent_dim=3)
        reports, splits = linkpred_eval(
            g, cfg, seeds=[0, 1], split_dir=str(tmp_path)
        )
        assert len(reports) == len(splits) == 2
        for rep, split in zip(reports, splits):
            assert 0.0 <= rep.auc <= 1.0
            assert 0.0 <= rep.ap <= 1.0
            assert rep.seed == split.seed
        assert os.path.isdir(tmp_path / "split-seed0")
        assert os.path.isdir(tmp_path / "split-seed1")


class TestWriteReport:
    def test_rows_mean_std(self, tmp_path):
        path = str(tmp_path / "report.json")
        rows = [
            {"seed": 0, "acc": 0.8, "nmi": 0.6},
            {"seed": 1, "acc": 0.6, "nmi": 0.4},
        ]
        write_report(path, "clustering", rows, extra={"n": 60})
        with open(path) as f:
            doc = json.load(f)
        assert doc["task"] == "clustering"
        assert doc["rows"] == rows
        assert doc["mean"]["acc"] == pytest.approx(0.7)
        assert doc["std"]["nmi"] == pytest.approx(0.1)
        assert "seed" not in doc["mean"]
        assert doc["n"] == 60

    def test_empty_rows(self, tmp_path):
        path = str(tmp_path / "report.json")
        write_report(path, "t", [])
        with open(path) as f:
            doc = json.load(f)
        assert doc == {"task": "t", "rows": []}
