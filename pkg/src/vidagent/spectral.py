"""Similarity matrix and spectral clustering for super-node construction.

S_ij is the embedding cosine of the two nodes' name+attribute texts, masked
to pairs within 2 undirected hops (negatives clamped to 0, unit diagonal).
Cluster count comes from the largest successive eigenvalue gap of the
normalized Laplacian, clamped to [3, 8]; clusters with more than 3 members
become super-nodes inheriting the union of member spans and the
intersection of their attributes.
"""

import logging
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from .graph import EntityNode, SuperNode, TemporalKnowledgeGraph, hop_distances
from .intervals import merge_ranges

logger = logging.getLogger(__name__)


def similarity_matrix(graph: TemporalKnowledgeGraph, embedder) -> Tuple[np.ndarray, List[Any]]:
    """Symmetric similarity matrix over graph nodes (2-hop masked cosine)."""
    node_ids = graph.node_order()
    n = len(node_ids)
    usages: List[Any] = []
    S = np.zeros((n, n), dtype=np.float64)
    if n == 0:
        return S, usages
    reply = embedder.embed([graph.nodes[nid].seed_text() for nid in node_ids])
    usages.append(reply.usage)
    vectors = reply.vectors.astype(np.float64)
    norms = np.linalg.norm(vectors, axis=1)
    norms[norms == 0.0] = 1.0
    unit = vectors / norms[:, None]
    cos = unit @ unit.T

    adj = graph.undirected_adjacency()
    for i, nid in enumerate(node_ids):
        dist = hop_distances(adj, nid, cutoff=2)
        for j, other in enumerate(node_ids):
            if i == j:
                continue
            if dist.get(other, 99) <= 2:
                S[i, j] = max(0.0, cos[i, j])
    np.fill_diagonal(S, 1.0)
    return (S + S.T) / 2.0, usages


def pick_cluster_count(eigenvalues: np.ndarray, k_range: Tuple[int, int] = (3, 8)) -> int:
    """Elbow rule: argmax of successive eigenvalue gaps within the clamp range."""
    n = len(eigenvalues)
    lo, hi = k_range
    lo = max(1, lo)
    hi = min(hi, n)
    candidates = [k for k in range(lo, hi + 1) if k < n]
    if not candidates:
        return min(lo, n)
    gaps = [eigenvalues[k] - eigenvalues[k - 1] for k in candidates]
    return candidates[int(np.argmax(gaps))]


def _farthest_first_centroids(points: np.ndarray, k: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    n = points.shape[0]
    first = int(rng.integers(0, n))
    chosen = [first]
    dist = np.linalg.norm(points - points[first], axis=1)
    while len(chosen) < k:
        nxt = int(np.argmax(dist))  # ties resolve to the lowest index
        chosen.append(nxt)
        dist = np.minimum(dist, np.linalg.norm(points - points[nxt], axis=1))
    return points[chosen].copy()


def kmeans_deterministic(points: np.ndarray, k: int, seed: int = 0,
                         max_iter: int = 100) -> np.ndarray:
    """Lloyd iterations with farthest-first init; fully reproducible."""
    n = points.shape[0]
    k = min(k, n)
    centroids = _farthest_first_centroids(points, k, seed)
    labels = np.full(n, -1, dtype=np.int64)
    for _ in range(max_iter):
        d2 = ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        new_labels = np.argmin(d2, axis=1)  # ties resolve to the lowest centroid
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for c in range(k):
            members = points[labels == c]
            if len(members):
                centroids[c] = members.mean(axis=0)
    return labels


def cluster_labels(graph: TemporalKnowledgeGraph, S: np.ndarray,
                   k_range: Tuple[int, int] = (3, 8), seed: int = 0) -> Optional[np.ndarray]:
    """Spectral cluster assignment per node in graph order.

    Normalized Laplacian of S, smallest-k eigenvector embedding (rows
    re-normalized), then the deterministic k-means above. Raises
    numpy.linalg.LinAlgError if the eigensolver fails to converge.
    """
    n = len(graph.nodes)
    if n < 2:
        return None
    degrees = S.sum(axis=1).astype(np.float64).copy()
    degrees[degrees <= 0.0] = 1.0
    inv_sqrt = 1.0 / np.sqrt(degrees)
    L = np.eye(n) - (inv_sqrt[:, None] * S * inv_sqrt[None, :])
    L = (L + L.T) / 2.0
    eigenvalues, eigenvectors = np.linalg.eigh(L)
    k = max(1, min(pick_cluster_count(eigenvalues, k_range), n))
    embedding = eigenvectors[:, :k]
    row_norms = np.linalg.norm(embedding, axis=1)
    row_norms[row_norms == 0.0] = 1.0
    return kmeans_deterministic(embedding / row_norms[:, None], k, seed=seed)


def aggregate_supernode(super_id: str, members: List[EntityNode]) -> SuperNode:
    """Fold a member cluster into one super-node: span is the interval union
    of member timelines, attributes their exact intersection."""
    span = merge_ranges([t for m in members for t in m.timeline])
    common = set(members[0].attributes)
    for m in members[1:]:
        common &= set(m.attributes)
    label = "group of: " + ", ".join(m.name for m in members[:3])
    return SuperNode(super_id=super_id, members=[m.node_id for m in members],
                     label=label, span=span, common_attributes=sorted(common))


def cluster_supernodes(graph: TemporalKnowledgeGraph, S: np.ndarray,
                       k_range: Tuple[int, int] = (3, 8), seed: int = 0,
                       ) -> Tuple[List[SuperNode], List[str]]:
    """Cluster S and aggregate every cluster with more than 3 entities.

    Returns (supernodes, diagnostics); the graph is untouched so callers
    decide whether to attach. Eigensolver non-convergence degrades to an
    empty super-node list with a diagnostic.
    """
    diagnostics: List[str] = []
    node_ids = graph.node_order()
    try:
        labels = cluster_labels(graph, S, k_range=k_range, seed=seed)
    except np.linalg.LinAlgError as exc:
        diagnostics.append(f"eigensolver failed, super-nodes skipped: {exc}")
        return [], diagnostics
    if labels is None:
        return [], diagnostics

    clusters: Dict[int, List[int]] = {}
    for idx, label in enumerate(labels):
        clusters.setdefault(int(label), []).append(idx)
    ordered = sorted(clusters.values(), key=lambda idxs: idxs[0])

    supernodes: List[SuperNode] = []
    counter = 0
    for idxs in ordered:
        if len(idxs) <= 3:
            continue  # a super-node needs more than 3 entities
        members = [graph.nodes[node_ids[i]] for i in idxs]
        supernodes.append(aggregate_supernode(f"super_{counter}", members))
        counter += 1
    return supernodes, diagnostics
