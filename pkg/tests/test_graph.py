import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_graph
from oracles import betweenness_oracle
from vidagent.graph import (
    EntityNode,
    RawExtraction,
    RawInteraction,
    RawSubject,
    TemporalKnowledgeGraph,
    assemble_graph,
    betweenness,
    caption_windows,
    clip_membership,
    combine_importance,
    compute_base_weights,
    degree_centrality,
    extract_entities,
    frequency_score,
    graph_from_dict,
    graph_to_dict,
    parse_extraction_reply,
    query_graph,
    rank_by_query_vector,
    shortest_path,
)
from vidagent.intervals import TimeRange
from vidagent.kb import plan_segments
from vidagent.mocks import HashEmbedder, MockScript, ScriptedChat


class TestCaptionWindows:
    def test_forty_captions_three_windows(self):
        assert caption_windows(40, 16, 2) == [(0, 16), (14, 30), (28, 40)]

    def test_single_window(self):
        assert caption_windows(6, 16, 2) == [(0, 6)]

    def test_empty(self):
        assert caption_windows(0, 16, 2) == []


EXTRACTION_REPLY = json.dumps({
    "video_analysis": [
        {"subject_id": "Subject_100", "subject_name": "Man in red shirt",
         "appearance_timeline": [["0.0", "5.0"]], "attributes": ["red shirt"],
         "actions_events": [{"action": "enters room", "timestamp": ["0.0", "2.0"]}]},
        {"subject_id": "Subject_101", "subject_name": "Woman in blue dress",
         "appearance_timeline": [["5.0", "10.0"]], "attributes": ["blue dress"],
         "actions_events": []},
    ],
    "interactions": [
        {"subjects_involved": ["Subject_100", "Subject_101"],
         "interaction_description": "Subject_100 gives book to Subject_101",
         "timestamp": ["3.0", "4.0"]},
    ],
})


class TestExtraction:
    def test_scripted_two_subjects_one_interaction(self):
        chat = ScriptedChat(MockScript(replies=[{"text": EXTRACTION_REPLY}]))
        extraction, usages = extract_entities(["cap1", "cap2"], chat)
        assert len(extraction.subjects) == 2
        assert len(extraction.interactions) == 1
        assert len(usages) == 1

    def test_parse_failure_retried_then_skipped(self):
        chat = ScriptedChat(MockScript(replies=[{"text": "no json"},
                                                {"text": "still no json"}]))
        extraction, usages = extract_entities(["cap"], chat)
        assert extraction.subjects == []
        assert any("skipped" in d for d in extraction.diagnostics)
        assert len(usages) == 2

    def test_windowing_makes_three_calls(self):
        replies = [{"text": EXTRACTION_REPLY}] * 3
        chat = ScriptedChat(MockScript(replies=replies))
        captions = [f"caption {i}" for i in range(40)]
        extraction, usages = extract_entities(captions, chat)
        assert len(usages) == 3
        assert len(extraction.subjects) == 6  # merged later in assembly

    def test_parse_extraction_reply_shapes(self):
        assert parse_extraction_reply("prose only") is None
        parsed = parse_extraction_reply("prefix " + EXTRACTION_REPLY + " suffix")
        assert parsed is not None
        assert parsed.subjects[0].subject_id == "Subject_100"
        assert parsed.subjects[0].actions[0].description == "enters room"


class TestAssembly:
    def test_same_id_timelines_merge(self):
        extraction = RawExtraction(subjects=[
            RawSubject("Subject_100", "man", timeline=[TimeRange(0, 5)]),
            RawSubject("Subject_100", "man", timeline=[TimeRange(5, 10)]),
        ])
        graph, diags, _ = assemble_graph(extraction, HashEmbedder())
        assert list(graph.nodes) == ["Subject_100"]
        assert graph.nodes["Subject_100"].timeline == [TimeRange(0, 10)]

    def test_null_id_merges_above_threshold(self):
        extraction = RawExtraction(subjects=[
            RawSubject("Subject_100", "Man in red shirt", timeline=[TimeRange(0, 5)]),
            RawSubject(None, "man in red shirt", timeline=[TimeRange(10, 15)],
                       attributes=["tall"]),
        ])
        graph, _, _ = assemble_graph(extraction, HashEmbedder(), identity_threshold=0.85)
        assert list(graph.nodes) == ["Subject_100"]
        node = graph.nodes["Subject_100"]
        assert node.timeline == [TimeRange(0, 5), TimeRange(10, 15)]
        assert "tall" in node.attributes

    def test_null_id_below_threshold_new_node(self):
        extraction = RawExtraction(subjects=[
            RawSubject("Subject_100", "man in red shirt"),
            RawSubject(None, "completely different person entirely"),
        ])
        graph, _, _ = assemble_graph(extraction, HashEmbedder(), identity_threshold=0.85)
        assert set(graph.nodes) == {"Subject_100", "Entity_1"}

    def test_interaction_becomes_directed_edge(self):
        extraction = RawExtraction(
            subjects=[RawSubject("A", "alice"), RawSubject("B", "bob")],
            interactions=[RawInteraction(["A", "B"], "A gives book to B",
                                         TimeRange(3, 4))])
        graph, diags, _ = assemble_graph(extraction, HashEmbedder())
        assert len(graph.edges) == 1
        edge = graph.edges[0]
        assert (edge.src, edge.dst) == ("A", "B")
        assert edge.span == TimeRange(3, 4)
        assert not diags

    def test_unknown_reference_dropped_with_diagnostic(self):
        extraction = RawExtraction(
            subjects=[RawSubject("A", "alice"), RawSubject("B", "bob")],
            interactions=[RawInteraction(["A", "Subject_999"], "ghost", TimeRange(0, 1))])
        graph, diags, _ = assemble_graph(extraction, HashEmbedder())
        assert graph.edges == []
        assert any("Subject_999" in d for d in diags)

    def test_edge_clamped_to_duration(self):
        extraction = RawExtraction(
            subjects=[RawSubject("A", "alice"), RawSubject("B", "bob")],
            interactions=[RawInteraction(["A", "B"], "late wave", TimeRange(8, 20))])
        graph, _, _ = assemble_graph(extraction, HashEmbedder(), duration=10.0)
        assert graph.edges[0].span == TimeRange(8, 10)

    def test_self_edge_rejected(self):
        extraction = RawExtraction(
            subjects=[RawSubject("A", "alice")],
            interactions=[RawInteraction(["A", "A"], "talks to self", TimeRange(0, 1))])
        graph, diags, _ = assemble_graph(extraction, HashEmbedder())
        assert graph.edges == []
        assert any("self" in d for d in diags)


class TestBetweenness:
    def test_path_graph(self):
        graph = make_graph(
            {"A": ("a", [], []), "B": ("b", [], []), "C": ("c", [], [])},
            [("A", "B", "ab", (0, 1)), ("B", "C", "bc", (0, 1))])
        got = betweenness(graph)
        assert got == {"A": 0.0, "B": 1.0, "C": 0.0}

    def test_complete_graph_k4(self):
        ids = ["A", "B", "C", "D"]
        edges = [(a, b, f"{a}{b}", (0, 1)) for i, a in enumerate(ids) for b in ids[i + 1:]]
        graph = make_graph({i: (i.lower(), [], []) for i in ids}, edges)
        assert betweenness(graph) == {i: 0.0 for i in ids}

    def test_single_node(self):
        graph = make_graph({"A": ("a", [], [])}, [])
        assert betweenness(graph) == {"A": 0.0}

    @given(st.integers(min_value=2, max_value=8), st.data())
    @settings(max_examples=120, deadline=None)
    def test_matches_oracle_on_random_graphs(self, n, data):
        ids = [f"N{i}" for i in range(n)]
        possible = [(a, b) for i, a in enumerate(ids) for b in ids[i + 1:]]
        chosen = data.draw(st.lists(st.sampled_from(possible), unique=True,
                                    max_size=len(possible)))
        graph = make_graph({i: (i.lower(), [], []) for i in ids},
                           [(a, b, "e", (0, 1)) for a, b in chosen])
        got = betweenness(graph)
        want = betweenness_oracle(ids, chosen)
        for node_id in ids:
            assert got[node_id] == pytest.approx(want[node_id], abs=1e-12)

    def test_direction_ignored(self):
        fwd = make_graph({"A": ("a", [], []), "B": ("b", [], []), "C": ("c", [], [])},
                         [("A", "B", "x", (0, 1)), ("B", "C", "x", (0, 1))])
        rev = make_graph({"A": ("a", [], []), "B": ("b", [], []), "C": ("c", [], [])},
                         [("B", "A", "x", (0, 1)), ("C", "B", "x", (0, 1))])
        assert betweenness(fwd) == betweenness(rev)


class TestDegree:
    def test_max_degree_norm_is_one_with_edges(self):
        graph = make_graph(
            {"A": ("a", [], []), "B": ("b", [], []), "C": ("c", [], [])},
            [("A", "B", "x", (0, 1))])
        got = degree_centrality(graph)
        assert max(got.values()) == 1.0
        assert got["C"] == 0.0

    def test_parallel_edges_count_once(self):
        graph = make_graph(
            {"A": ("a", [], []), "B": ("b", [], []), "C": ("c", [], [])},
            [("A", "B", "x", (0, 1)), ("B", "A", "y", (2, 3)), ("A", "C", "z", (0, 1))])
        got = degree_centrality(graph)
        assert got["A"] == 1.0
        assert got["B"] == 0.5


class TestImportance:
    def test_frequency_worked_example(self):
        # 2 of 10 clips, 10 seconds visible
        got = frequency_score(2, 10, 10.0)
        assert got == pytest.approx(0.2 * math.log(11.0), abs=1e-12)
        assert got == pytest.approx(0.4796, abs=1e-4)

    def test_weight_worked_example(self):
        got = combine_importance(0.4796, 0.65, 0.9)
        assert got == pytest.approx(0.65684, abs=1e-9)

    def test_lambda_defaults(self, config):
        assert config.lambdas == (0.4, 0.3, 0.3)

    @given(st.floats(0, 2), st.floats(0, 1), st.floats(0, 1),
           st.floats(0.0001, 1.0))
    @settings(max_examples=200)
    def test_monotone_in_each_component(self, f, c, q, delta):
        base = combine_importance(f, c, q)
        assert combine_importance(f + delta, c, q) >= base
        assert combine_importance(f, min(1.0, c + delta), q) >= base
        assert combine_importance(f, c, min(1.0, q + delta)) >= base

    def test_clip_membership_positive_overlap_only(self):
        graph = make_graph({"A": ("a", [], [(0.0, 5.0)])}, [])
        clips = plan_segments(15.0, 5.0)
        membership = clip_membership(graph, clips)
        assert membership["A"] == {0}  # touching clip 1 at t=5 does not count

    def test_base_weight_caching(self):
        graph = make_graph(
            {"A": ("alice", [], [(0.0, 10.0)]), "B": ("bob", [], [(5.0, 15.0)])},
            [("A", "B", "meet", (5.0, 6.0))])
        clips = plan_segments(15.0, 5.0)
        compute_base_weights(graph, 3, clips)
        from vidagent.graph import score_importance
        weights, _ = score_importance(graph, 3, clips, None, HashEmbedder())
        for nid in graph.nodes:
            assert graph.nodes[nid].base_weight == pytest.approx(weights[nid], abs=1e-12)

    def test_query_term_added(self):
        graph = make_graph({"A": ("red shirt man", [], [(0.0, 5.0)])}, [])
        clips = plan_segments(5.0, 5.0)
        from vidagent.graph import score_importance
        without, _ = score_importance(graph, 1, clips, None, HashEmbedder())
        with_query, _ = score_importance(graph, 1, clips, "red shirt man", HashEmbedder())
        assert with_query["A"] == pytest.approx(without["A"] + 0.3, abs=1e-6)


def _demo_graph():
    graph = make_graph(
        {"Subject_100": ("man in red shirt", ["red shirt"], [(0.0, 15.0)]),
         "Subject_101": ("woman in blue dress", ["blue dress"], [(5.0, 15.0)]),
         "Entity_1": ("street vendor", ["apron"], [(12.0, 18.0)])},
        [("Subject_100", "Subject_101", "gives book", (3.0, 4.0)),
         ("Subject_101", "Entity_1", "buys fruit", (14.0, 15.0))])
    compute_base_weights(graph, 6, plan_segments(30.0, 5.0))
    return graph


class TestQueryGraph:
    def test_exact_name_ranks_first(self):
        graph = _demo_graph()
        result, _ = query_graph(graph, "man in red shirt", HashEmbedder())
        assert result.entities[0].node.node_id == "Subject_100"
        assert any(e.description == "gives book" for _, e in result.entities[0].relations)

    def test_two_entity_path(self):
        graph = _demo_graph()
        result, _ = query_graph(graph, "man in red shirt", HashEmbedder(),
                                second_entity="woman in blue dress")
        assert result.path is not None
        assert result.path.node_ids == ["Subject_100", "Subject_101"]
        assert result.path.edges[0].description == "gives book"

    def test_no_match_falls_back_to_top3(self):
        graph = _demo_graph()
        result, _ = query_graph(graph, "zxqwv unrelated query", HashEmbedder(),
                                seed_threshold=0.35)
        assert len(result.entities) >= 1  # top-3 seeds keep traversal non-empty

    def test_empty_graph(self):
        result, usages = query_graph(TemporalKnowledgeGraph(), "anything", HashEmbedder())
        assert result.entities == []
        assert usages == []

    def test_ranking_scale_invariant(self):
        graph = _demo_graph()
        emb = HashEmbedder()
        node_ids = list(graph.nodes)
        name_vecs = {nid: emb.embed_one(graph.nodes[nid].name) for nid in node_ids}
        q = emb.embed_one("red shirt book")
        ranked1 = rank_by_query_vector(graph, node_ids, name_vecs, q, 0.3, 32)
        ranked2 = rank_by_query_vector(graph, node_ids, name_vecs, 7.3 * q, 0.3, 32)
        assert [r[0] for r in ranked1] == [r[0] for r in ranked2]

    def test_cap_truncates(self):
        nodes = {f"N{i}": (f"node {i}", [], [(0.0, 1.0)]) for i in range(40)}
        graph = make_graph(nodes, [])
        result, _ = query_graph(graph, "node 1", HashEmbedder(), cap=32)
        assert len(result.entities) <= 32

    def test_hop_limit(self):
        # chain A-B-C-D; seeds match only A; 2 hops exclude D
        graph = make_graph(
            {"A": ("alpha unique", [], [(0, 1)]), "B": ("beta", [], [(0, 1)]),
             "C": ("gamma", [], [(0, 1)]), "D": ("delta", [], [(0, 1)])},
            [("A", "B", "1", (0, 1)), ("B", "C", "2", (0, 1)), ("C", "D", "3", (0, 1))])
        result, _ = query_graph(graph, "alpha unique", HashEmbedder(), max_hops=2,
                                seed_threshold=0.9)
        ids = {e.node.node_id for e in result.entities}
        assert "D" not in ids
        assert {"A", "B", "C"} == ids


class TestShortestPath:
    def test_disconnected(self):
        graph = make_graph({"A": ("a", [], []), "B": ("b", [], [])}, [])
        assert shortest_path(graph, "A", "B") is None

    def test_same_node(self):
        graph = make_graph({"A": ("a", [], [])}, [])
        path = shortest_path(graph, "A", "A")
        assert path.node_ids == ["A"]


class TestSerialization:
    def test_round_trip(self):
        graph = _demo_graph()
        data = graph_to_dict(graph)
        back = graph_from_dict(data)
        assert graph_to_dict(back) == data

    def test_deterministic_bytes(self):
        graph = _demo_graph()
        a = json.dumps(graph_to_dict(graph), sort_keys=True)
        b = json.dumps(graph_to_dict(_demo_graph()), sort_keys=True)
        assert a == b
