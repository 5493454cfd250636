"""Entity-centric temporal knowledge graph.

Nodes are tracked subjects with attributes, actions, and an appearance
timeline; directed edges are timed interactions between them. Super-nodes
(built in spectral.py) aggregate clusters of related entities. Importance
weights rank traversal results: a cached build-time part (frequency +
centrality) plus a per-query relevance term.
"""

import logging
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Set, Tuple

import numpy as np

from .intervals import TimeRange, merge_ranges, overlap_length, total_length
from .util import extract_json_object, parse_seconds

logger = logging.getLogger(__name__)


@dataclass
class EntityAction:
    description: str
    span: TimeRange


@dataclass
class EntityNode:
    node_id: str
    name: str
    attributes: List[str] = field(default_factory=list)
    actions: List[EntityAction] = field(default_factory=list)
    timeline: List[TimeRange] = field(default_factory=list)  # sorted, non-overlapping
    base_weight: float = 0.0  # query-independent part of the importance weight

    def seed_text(self) -> str:
        """Text used for query/seed matching: name plus attributes."""
        return " ".join([self.name] + self.attributes)


@dataclass
class RelationEdge:
    src: str
    dst: str
    description: str
    span: TimeRange


@dataclass
class SuperNode:
    super_id: str
    members: List[str]
    label: str
    span: List[TimeRange]              # union of member timelines
    common_attributes: List[str]       # intersection of member attributes


@dataclass
class TemporalKnowledgeGraph:
    nodes: Dict[str, EntityNode] = field(default_factory=dict)
    edges: List[RelationEdge] = field(default_factory=list)
    supernodes: List[SuperNode] = field(default_factory=list)

    def node_order(self) -> List[str]:
        return list(self.nodes.keys())

    def validate(self) -> None:
        for edge in self.edges:
            if edge.src not in self.nodes or edge.dst not in self.nodes:
                raise ValueError(f"edge {edge.src}->{edge.dst} references missing node")
        for sn in self.supernodes:
            if len(sn.members) < 4:
                raise ValueError(f"super-node {sn.super_id} has fewer than 4 members")
            for m in sn.members:
                if m not in self.nodes:
                    raise ValueError(f"super-node {sn.super_id} references missing node {m}")

    def undirected_adjacency(self) -> Dict[str, Set[str]]:
        adj: Dict[str, Set[str]] = {nid: set() for nid in self.nodes}
        for e in self.edges:
            if e.src in adj and e.dst in adj and e.src != e.dst:
                adj[e.src].add(e.dst)
                adj[e.dst].add(e.src)
        return adj


# ---------------------------------------------------------------------------
# Extraction
# ---------------------------------------------------------------------------


@dataclass
class RawSubject:
    subject_id: Optional[str]
    name: str
    timeline: List[TimeRange] = field(default_factory=list)
    attributes: List[str] = field(default_factory=list)
    actions: List[EntityAction] = field(default_factory=list)


@dataclass
class RawInteraction:
    subject_ids: List[str]
    description: str
    span: TimeRange


@dataclass
class RawExtraction:
    subjects: List[RawSubject] = field(default_factory=list)
    interactions: List[RawInteraction] = field(default_factory=list)
    diagnostics: List[str] = field(default_factory=list)


def caption_windows(count: int, window_size: int, overlap: int) -> List[Tuple[int, int]]:
    """Window boundaries over a caption sequence (fixed size, small overlap)."""
    if count <= 0:
        return []
    if window_size <= overlap:
        raise ValueError("window size must exceed overlap")
    step = window_size - overlap
    windows = []
    start = 0
    while True:
        end = min(start + window_size, count)
        windows.append((start, end))
        if end >= count:
            break
        start += step
    return windows


def _parse_span_list(raw: Any, diagnostics: List[str], where: str) -> List[TimeRange]:
    spans: List[TimeRange] = []
    if not isinstance(raw, list):
        return spans
    for pair in raw:
        if not isinstance(pair, (list, tuple)) or len(pair) != 2:
            diagnostics.append(f"{where}: malformed interval {pair!r}")
            continue
        s, e = parse_seconds(pair[0]), parse_seconds(pair[1])
        if s is None or e is None:
            diagnostics.append(f"{where}: unparseable timestamps {pair!r}")
            continue
        if e < s:
            s, e = e, s
        spans.append(TimeRange(max(0.0, s), max(0.0, e)))
    return spans


def parse_extraction_reply(raw_reply: str) -> Optional[RawExtraction]:
    """Parse one extraction window reply; None when the JSON shape is absent."""
    obj = extract_json_object(raw_reply)
    if obj is None:
        return None
    analysis = obj.get("video_analysis")
    interactions_raw = obj.get("interactions")
    if not isinstance(analysis, list) and not isinstance(interactions_raw, list):
        return None
    out = RawExtraction()
    for item in analysis if isinstance(analysis, list) else []:
        if not isinstance(item, dict):
            out.diagnostics.append(f"subject entry is not an object: {item!r}")
            continue
        name = str(item.get("subject_name") or "").strip()
        if not name:
            out.diagnostics.append("subject without a name dropped")
            continue
        sid = item.get("subject_id")
        sid = str(sid).strip() if sid not in (None, "", "null") else None
        timeline = _parse_span_list(item.get("appearance_timeline"), out.diagnostics, name)
        attrs = [str(a) for a in item.get("attributes", []) if str(a).strip()]
        actions: List[EntityAction] = []
        for ev in item.get("actions_events", []) or []:
            if not isinstance(ev, dict):
                continue
            desc = str(ev.get("action") or "").strip()
            spans = _parse_span_list([ev.get("timestamp")], out.diagnostics, name)
            if desc and spans:
                actions.append(EntityAction(description=desc, span=spans[0]))
        out.subjects.append(RawSubject(subject_id=sid, name=name, timeline=timeline,
                                       attributes=attrs, actions=actions))
    for item in interactions_raw if isinstance(interactions_raw, list) else []:
        if not isinstance(item, dict):
            continue
        involved = [str(s) for s in item.get("subjects_involved", []) if str(s).strip()]
        desc = str(item.get("interaction_description") or "").strip()
        spans = _parse_span_list([item.get("timestamp")], out.diagnostics, desc or "interaction")
        if len(involved) < 2 or not desc or not spans:
            out.diagnostics.append(f"incomplete interaction dropped: {item!r}")
            continue
        out.interactions.append(RawInteraction(subject_ids=involved, description=desc,
                                               span=spans[0]))
    return out


EXTRACTION_PROMPT = """You are a professional Video Content Analyst.

Your task is to analyze a complete, chronological list of video captions provided by the user.

**Core Objectives:**

1. **Analyze Human Subjects:**
   • Focus **exclusively on human subjects**.
   • If a human has a pre-defined ID (e.g., 'Subject_100', 'Person_12') mentioned in the caption, you **MUST** place this ID in the `subject_id` field.
   • You **MUST** also provide a descriptive `subject_name` (e.g., 'Man in red shirt', 'Anna').
   • If no pre-defined ID is present, the `subject_id` field **MUST** be `null`.
   • Consolidate each subject's attributes, *total* appearance timeline, and their *individual* actions (e.g., 'walks across room', 'sits down').

2. **Analyze Interactions:**
   • Identify all **INTERACTIONS** between two or more identified human subjects.
   • Log these events in the top-level `interactions` list.
   • **CRITICAL:** When populating the `subjects_involved` list for an interaction, you **MUST** use the `subject_id` (e.g., 'Subject_100') of the subjects, not their descriptive `subject_name`.

**JSON Schema (Strict):**

The root output **MUST** be a JSON object with two keys: `video_analysis` and `interactions`.

```json
{
  "video_analysis": [{
    "subject_id": "Subject_100",
    "subject_name": "Man in red shirt",
    "appearance_timeline": [["start_time_str", "end_time_str"]],
    "attributes": ["attr 1", "attr 2"],
    "actions_events": [{
      "action": "The specific *individual* action performed (e.g., 'sits down')",
      "timestamp": ["start_time_of_action", "end_time_of_action"]}]}],
  "interactions": [{
    "subjects_involved": ["Subject_100", "Subject_101"],
    "interaction_description": "A clear description of the interaction (e.g., 'Subject_100 gives book to Subject_101')",
    "timestamp": ["start_time_of_interaction", "end_time_of_interaction"]
  }]
}
```"""


def extract_entities(captions: Sequence[str], chat_backend, window_size: int = 16,
                     window_overlap: int = 2) -> Tuple[RawExtraction, List[Any]]:
    """Run windowed entity extraction over the caption sequence.

    Per-window parse failures are retried once, then the window is skipped
    with a diagnostic. Returns the concatenated extraction plus the Usage
    records of every chat call made.
    """
    from .backends import BackendError, ChatRequest

    merged = RawExtraction()
    usages: List[Any] = []
    for w_start, w_end in caption_windows(len(captions), window_size, window_overlap):
        window_text = "\n".join(captions[w_start:w_end])
        request = ChatRequest(messages=[
            {"role": "system", "content": EXTRACTION_PROMPT},
            {"role": "user", "content": window_text},
        ])
        extraction: Optional[RawExtraction] = None
        for attempt in range(2):
            try:
                reply = chat_backend.chat(request)
            except BackendError as exc:
                merged.diagnostics.append(
                    f"extraction window [{w_start},{w_end}) backend failure: {exc}")
                continue
            usages.append(reply.usage)
            extraction = parse_extraction_reply(reply.text)
            if extraction is not None:
                break
            if attempt == 0:
                merged.diagnostics.append(
                    f"extraction window [{w_start},{w_end}) unparseable, retrying")
        if extraction is None:
            merged.diagnostics.append(f"extraction window [{w_start},{w_end}) skipped")
            continue
        merged.subjects.extend(extraction.subjects)
        merged.interactions.extend(extraction.interactions)
        merged.diagnostics.extend(extraction.diagnostics)
    return merged, usages


# ---------------------------------------------------------------------------
# Assembly
# ---------------------------------------------------------------------------


def _cosine(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = float(np.linalg.norm(a)), float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def _merge_subject_into(node: EntityNode, subject: RawSubject) -> None:
    node.timeline = merge_ranges(node.timeline + subject.timeline)
    for attr in subject.attributes:
        if attr not in node.attributes:
            node.attributes.append(attr)
    node.actions.extend(subject.actions)


def assemble_graph(extraction: RawExtraction, embedder, identity_threshold: float = 0.85,
                   duration: Optional[float] = None) -> Tuple[TemporalKnowledgeGraph, List[str], List[Any]]:
    """Build the graph from a raw extraction.

    Subjects sharing a subject_id merge directly; null-id subjects merge into
    the best-matching existing node when the name-embedding cosine clears the
    identity threshold, otherwise they get a generated id. Each interaction
    becomes one directed edge from the first listed subject to the second.
    """
    graph = TemporalKnowledgeGraph()
    diagnostics: List[str] = []
    usages: List[Any] = []

    identified = [s for s in extraction.subjects if s.subject_id]
    anonymous = [s for s in extraction.subjects if not s.subject_id]

    for subject in identified:
        node = graph.nodes.get(subject.subject_id)
        if node is None:
            node = EntityNode(node_id=subject.subject_id, name=subject.name)
            graph.nodes[subject.subject_id] = node
        _merge_subject_into(node, subject)

    if anonymous:
        names = [n.name for n in graph.nodes.values()] + [s.name for s in anonymous]
        reply = embedder.embed(names)
        usages.append(reply.usage)
        vectors = reply.vectors
        node_ids = list(graph.nodes.keys())
        node_vecs = {nid: vectors[i] for i, nid in enumerate(node_ids)}
        next_generated = 1
        for offset, subject in enumerate(anonymous):
            svec = vectors[len(node_ids) + offset]
            best_id, best_cos = None, -1.0
            for nid, nvec in node_vecs.items():
                c = _cosine(svec, nvec)
                if c > best_cos:
                    best_id, best_cos = nid, c
            if best_id is not None and best_cos >= identity_threshold:
                _merge_subject_into(graph.nodes[best_id], subject)
            else:
                while f"Entity_{next_generated}" in graph.nodes:
                    next_generated += 1
                nid = f"Entity_{next_generated}"
                node = EntityNode(node_id=nid, name=subject.name)
                _merge_subject_into(node, subject)
                graph.nodes[nid] = node
                node_vecs[nid] = svec

    for inter in extraction.interactions:
        resolved = [sid for sid in inter.subject_ids if sid in graph.nodes]
        if len(resolved) < 2:
            diagnostics.append(f"interaction references unknown subject(s): {inter.subject_ids}")
            continue
        src, dst = resolved[0], resolved[1]
        if src == dst:
            diagnostics.append(f"self-interaction dropped for {src}")
            continue
        span = inter.span
        if duration is not None:
            clamped = span.clamped(0.0, duration)
            if clamped is None:
                diagnostics.append(f"interaction outside video dropped: {inter.description!r}")
                continue
            span = clamped
        graph.edges.append(RelationEdge(src=src, dst=dst,
                                        description=inter.description, span=span))

    graph.validate()
    return graph, diagnostics, usages


# ---------------------------------------------------------------------------
# Centrality and importance
# ---------------------------------------------------------------------------


def hop_distances(adj: Dict[str, Set[str]], source: str, cutoff: Optional[int] = None) -> Dict[str, int]:
    """BFS hop counts from source (undirected)."""
    dist = {source: 0}
    queue = deque([source])
    while queue:
        v = queue.popleft()
        if cutoff is not None and dist[v] >= cutoff:
            continue
        for w in adj[v]:
            if w not in dist:
                dist[w] = dist[v] + 1
                queue.append(w)
    return dist


def betweenness(graph: TemporalKnowledgeGraph) -> Dict[str, float]:
    """Normalized betweenness centrality on the undirected edge view.

    Exact shortest-path counting (Brandes accumulation); values are divided
    by the maximum over nodes, all-zero graphs stay all-zero.
    """
    adj = graph.undirected_adjacency()
    nodes = list(adj.keys())
    raw = {v: 0.0 for v in nodes}
    for source in nodes:
        # single-source shortest paths with path counts
        dist = {v: -1 for v in nodes}
        sigma = {v: 0.0 for v in nodes}
        preds: Dict[str, List[str]] = {v: [] for v in nodes}
        dist[source] = 0
        sigma[source] = 1.0
        order: List[str] = []
        queue = deque([source])
        while queue:
            v = queue.popleft()
            order.append(v)
            for w in adj[v]:
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    queue.append(w)
                if dist[w] == dist[v] + 1:
                    sigma[w] += sigma[v]
                    preds[w].append(v)
        # dependency accumulation in reverse BFS order
        delta = {v: 0.0 for v in nodes}
        for w in reversed(order):
            for v in preds[w]:
                delta[v] += (sigma[v] / sigma[w]) * (1.0 + delta[w])
            if w != source:
                raw[w] += delta[w]
    peak = max(raw.values(), default=0.0)
    if peak <= 0.0:
        return {v: 0.0 for v in nodes}
    return {v: raw[v] / peak for v in nodes}


def degree_centrality(graph: TemporalKnowledgeGraph) -> Dict[str, float]:
    """Distinct-neighbor degree normalized by the maximum degree."""
    adj = graph.undirected_adjacency()
    degrees = {v: float(len(ns)) for v, ns in adj.items()}
    peak = max(degrees.values(), default=0.0)
    if peak <= 0.0:
        return {v: 0.0 for v in degrees}
    return {v: d / peak for v, d in degrees.items()}


def clip_membership(graph: TemporalKnowledgeGraph,
                    clip_ranges: Sequence[TimeRange]) -> Dict[str, Set[int]]:
    """Clips each node appears in: positive-length timeline overlap."""
    out: Dict[str, Set[int]] = {}
    for nid, node in graph.nodes.items():
        hit = set()
        for i, clip_span in enumerate(clip_ranges):
            if any(overlap_length(t, clip_span) > 0.0 for t in node.timeline):
                hit.add(i)
        out[nid] = hit
    return out


def frequency_score(clips_containing: int, clip_count: int, visible_seconds: float) -> float:
    """Temporal persistence: clip share scaled by log total visibility."""
    if clip_count <= 0:
        return 0.0
    return (clips_containing / clip_count) * math.log(1.0 + max(0.0, visible_seconds))


def combine_importance(freq: float, centrality: float, query_rel: float,
                       lambdas: Tuple[float, float, float] = (0.4, 0.3, 0.3)) -> float:
    l1, l2, l3 = lambdas
    return l1 * freq + l2 * centrality + l3 * query_rel


def score_importance(graph: TemporalKnowledgeGraph, clip_count: int,
                     clip_ranges: Sequence[TimeRange], query: Optional[str],
                     embedder, lambdas: Tuple[float, float, float] = (0.4, 0.3, 0.3),
                     ) -> Tuple[Dict[str, float], List[Any]]:
    """Importance weight per node; the query term is zero when query is None."""
    usages: List[Any] = []
    membership = clip_membership(graph, clip_ranges)
    degree = degree_centrality(graph)
    between = betweenness(graph)
    rel: Dict[str, float] = {nid: 0.0 for nid in graph.nodes}
    if query is not None and graph.nodes:
        names = [graph.nodes[nid].name for nid in graph.nodes]
        reply = embedder.embed(names + [query])
        usages.append(reply.usage)
        qvec = reply.vectors[-1]
        for i, nid in enumerate(graph.nodes):
            rel[nid] = min(1.0, max(0.0, _cosine(reply.vectors[i], qvec)))
    weights: Dict[str, float] = {}
    for nid, node in graph.nodes.items():
        freq = frequency_score(len(membership[nid]), clip_count, total_length(node.timeline))
        cent = 0.5 * degree[nid] + 0.5 * between[nid]
        weights[nid] = combine_importance(freq, cent, rel[nid], lambdas)
    return weights, usages


def compute_base_weights(graph: TemporalKnowledgeGraph, clip_count: int,
                         clip_ranges: Sequence[TimeRange],
                         lambdas: Tuple[float, float, float] = (0.4, 0.3, 0.3)) -> None:
    """Cache the query-independent importance part on each node."""
    membership = clip_membership(graph, clip_ranges)
    degree = degree_centrality(graph)
    between = betweenness(graph)
    l1, l2, _ = lambdas
    for nid, node in graph.nodes.items():
        freq = frequency_score(len(membership[nid]), clip_count, total_length(node.timeline))
        cent = 0.5 * degree[nid] + 0.5 * between[nid]
        node.base_weight = l1 * freq + l2 * cent


# ---------------------------------------------------------------------------
# Query
# ---------------------------------------------------------------------------


@dataclass
class RankedEntity:
    node: EntityNode
    weight: float
    relations: List[Tuple[str, RelationEdge]]  # (other endpoint id, edge)


@dataclass
class PathResult:
    node_ids: List[str]
    edges: List[RelationEdge]


@dataclass
class GraphQueryResult:
    entities: List[RankedEntity] = field(default_factory=list)
    path: Optional[PathResult] = None


def _select_seeds(cosines: Sequence[float], node_ids: Sequence[str],
                  threshold: float) -> List[str]:
    seeds = [nid for nid, c in zip(node_ids, cosines) if c >= threshold]
    if seeds:
        return seeds
    # fall back to the top-3 matches so traversal is never empty
    order = sorted(range(len(node_ids)), key=lambda i: (-cosines[i], i))
    return [node_ids[i] for i in order[:3]]


def shortest_path(graph: TemporalKnowledgeGraph, src: str, dst: str) -> Optional[PathResult]:
    """Shortest undirected path with the edges realizing each hop."""
    if src not in graph.nodes or dst not in graph.nodes:
        return None
    if src == dst:
        return PathResult(node_ids=[src], edges=[])
    adj = graph.undirected_adjacency()
    parent: Dict[str, str] = {src: src}
    queue = deque([src])
    while queue:
        v = queue.popleft()
        for w in sorted(adj[v]):
            if w not in parent:
                parent[w] = v
                if w == dst:
                    queue.clear()
                    break
                queue.append(w)
    if dst not in parent:
        return None
    ids = [dst]
    while ids[-1] != src:
        ids.append(parent[ids[-1]])
    ids.reverse()
    edges: List[RelationEdge] = []
    for a, b in zip(ids, ids[1:]):
        hop = next((e for e in graph.edges
                    if (e.src == a and e.dst == b) or (e.src == b and e.dst == a)), None)
        if hop is not None:
            edges.append(hop)
    return PathResult(node_ids=ids, edges=edges)


def rank_by_query_vector(graph: TemporalKnowledgeGraph, node_ids: Sequence[str],
                         name_vectors: Dict[str, np.ndarray], query_vector: np.ndarray,
                         lambda_query: float, cap: int) -> List[Tuple[str, float]]:
    """Order nodes by cached base weight plus the query-relevance term."""
    scored = []
    order_index = {nid: i for i, nid in enumerate(graph.nodes)}
    for nid in node_ids:
        rel = min(1.0, max(0.0, _cosine(name_vectors[nid], query_vector)))
        scored.append((nid, graph.nodes[nid].base_weight + lambda_query * rel))
    scored.sort(key=lambda item: (-item[1], order_index[item[0]]))
    return scored[:cap]


def query_graph(graph: TemporalKnowledgeGraph, entity_query: str, embedder,
                second_entity: Optional[str] = None, max_hops: int = 2,
                seed_threshold: float = 0.35, lambda_query: float = 0.3,
                cap: int = 32) -> Tuple[GraphQueryResult, List[Any]]:
    """Seeded breadth-first retrieval ranked by importance weight.

    Seeds are nodes whose name+attribute embedding clears the seed threshold
    against the query (top-3 fallback). When second_entity is given, a
    shortest undirected path between the best seeds for each is included.
    """
    result = GraphQueryResult()
    usages: List[Any] = []
    if not graph.nodes:
        return result, usages

    node_ids = list(graph.nodes.keys())
    texts = [graph.nodes[nid].seed_text() for nid in node_ids]
    names = [graph.nodes[nid].name for nid in node_ids]
    queries = [entity_query] + ([second_entity] if second_entity else [])
    reply = embedder.embed(texts + names + queries)
    usages.append(reply.usage)
    n = len(node_ids)
    seed_vecs = reply.vectors[:n]
    name_vecs = {nid: reply.vectors[n + i] for i, nid in enumerate(node_ids)}
    qvec = reply.vectors[2 * n]

    cosines = [_cosine(seed_vecs[i], qvec) for i in range(n)]
    seeds = _select_seeds(cosines, node_ids, seed_threshold)

    adj = graph.undirected_adjacency()
    visited: Set[str] = set()
    for seed in seeds:
        for nid, d in hop_distances(adj, seed, cutoff=max_hops).items():
            if d <= max_hops:
                visited.add(nid)

    ranked = rank_by_query_vector(graph, sorted(visited, key=node_ids.index),
                                  name_vecs, qvec, lambda_query, cap)
    for nid, weight in ranked:
        relations = []
        for e in graph.edges:
            if e.src == nid:
                relations.append((e.dst, e))
            elif e.dst == nid:
                relations.append((e.src, e))
        result.entities.append(RankedEntity(node=graph.nodes[nid], weight=weight,
                                            relations=relations))

    if second_entity:
        svec = reply.vectors[2 * n + 1]
        best_a = max(range(n), key=lambda i: (cosines[i], -i))
        cos_b = [_cosine(seed_vecs[i], svec) for i in range(n)]
        best_b = max(range(n), key=lambda i: (cos_b[i], -i))
        result.path = shortest_path(graph, node_ids[best_a], node_ids[best_b])
    return result, usages


# ---------------------------------------------------------------------------
# Serialization (graph.json)
# ---------------------------------------------------------------------------


def graph_to_dict(graph: TemporalKnowledgeGraph) -> Dict[str, Any]:
    """Deterministic JSON form: nodes sorted by id, fixed field order."""
    return {
        "nodes": [
            {
                "node_id": node.node_id,
                "name": node.name,
                "attributes": list(node.attributes),
                "actions": [{"description": a.description, "t_start": a.span.start,
                             "t_end": a.span.end} for a in node.actions],
                "timeline": [[t.start, t.end] for t in node.timeline],
                "base_weight": node.base_weight,
            }
            for node in sorted(graph.nodes.values(), key=lambda n: n.node_id)
        ],
        "edges": [
            {"src": e.src, "dst": e.dst, "description": e.description,
             "t_start": e.span.start, "t_end": e.span.end}
            for e in graph.edges
        ],
        "supernodes": [
            {"super_id": sn.super_id, "members": list(sn.members), "label": sn.label,
             "span": [[t.start, t.end] for t in sn.span],
             "common_attributes": list(sn.common_attributes)}
            for sn in sorted(graph.supernodes, key=lambda s: s.super_id)
        ],
    }


def graph_from_dict(data: Dict[str, Any]) -> TemporalKnowledgeGraph:
    graph = TemporalKnowledgeGraph()
    for nd in data.get("nodes", []):
        node = EntityNode(
            node_id=nd["node_id"],
            name=nd["name"],
            attributes=list(nd.get("attributes", [])),
            actions=[EntityAction(description=a["description"],
                                  span=TimeRange(a["t_start"], a["t_end"]))
                     for a in nd.get("actions", [])],
            timeline=[TimeRange(p[0], p[1]) for p in nd.get("timeline", [])],
            base_weight=float(nd.get("base_weight", 0.0)),
        )
        graph.nodes[node.node_id] = node
    for ed in data.get("edges", []):
        graph.edges.append(RelationEdge(src=ed["src"], dst=ed["dst"],
                                        description=ed["description"],
                                        span=TimeRange(ed["t_start"], ed["t_end"])))
    for sd in data.get("supernodes", []):
        graph.supernodes.append(SuperNode(
            super_id=sd["super_id"], members=list(sd["members"]), label=sd["label"],
            span=[TimeRange(p[0], p[1]) for p in sd.get("span", [])],
            common_attributes=list(sd.get("common_attributes", []))))
    graph.validate()
    return graph
