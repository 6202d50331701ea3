"""GraphML and JSON adjacency serialisation of tax graphs."""

from __future__ import annotations

import json
from xml.sax.saxutils import escape, quoteattr

import numpy as np

from .graph import NO_ARC, SANCTION, TaxGraph, UndirectedTaxGraph
from .registry import JurisdictionRegistry, format_rate, rate_to_units

ADJACENCY_FORMAT = "conduit-adjacency"
ADJACENCY_VERSION = 1


def _edges(graph):
    if isinstance(graph, TaxGraph):
        return graph.arcs(), True
    return graph.edges(), False


def _edge_record(registry, i, j, units, directed):
    weight = units + SANCTION if directed else units
    return {
        "source": registry.code(i),
        "target": registry.code(j),
        "rate": format_rate(units),
        "weight": format_rate(weight),
        "sanction_included": directed,
    }


def to_adjacency(graph: TaxGraph | UndirectedTaxGraph, registry: JurisdictionRegistry) -> dict:
    edges, directed = _edges(graph)
    return {
        "format": ADJACENCY_FORMAT,
        "version": ADJACENCY_VERSION,
        "directed": directed,
        "income_type": graph.income_type.value if graph.income_type else None,
        "threshold": None if graph.threshold is None else format(graph.threshold, "f"),
        "nodes": [{"id": k, "code": c, "name": nm} for k, (c, nm) in enumerate(registry.entries)],
        "edges": [_edge_record(registry, i, j, u, directed) for i, j, u in edges],
    }


def dumps_adjacency(graph, registry) -> str:
    return json.dumps(to_adjacency(graph, registry), indent=2, ensure_ascii=False) + "\n"


def from_adjacency(doc: dict) -> tuple[JurisdictionRegistry, TaxGraph | UndirectedTaxGraph]:
    if doc.get("format") != ADJACENCY_FORMAT:
        raise ValueError("not a conduit adjacency document")
    nodes = sorted(doc["nodes"], key=lambda d: d["id"])
    registry = JurisdictionRegistry(tuple((d["code"], d["name"]) for d in nodes))
    n = registry.n
    rates = np.full((n, n), NO_ARC, dtype=np.int64)
    directed = bool(doc["directed"])
    for e in doc["edges"]:
        i, j = registry.id(e["source"]), registry.id(e["target"])
        u = rate_to_units(e["rate"])
        rates[i, j] = u
        if not directed:
            rates[j, i] = u
    cls = TaxGraph if directed else UndirectedTaxGraph
    return registry, cls(rates, doc.get("income_type"), doc.get("threshold"))


def load_adjacency(path):
    with open(path, encoding="utf-8") as fh:
        return from_adjacency(json.load(fh))


def to_graphml(graph: TaxGraph | UndirectedTaxGraph, registry: JurisdictionRegistry) -> str:
    edges, directed = _edges(graph)
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<graphml xmlns="http://graphml.graphdrawing.org/xmlns">',
        '  <key id="code" for="node" attr.name="code" attr.type="string"/>',
        '  <key id="name" for="node" attr.name="name" attr.type="string"/>',
        '  <key id="rate" for="edge" attr.name="rate" attr.type="string"/>',
        '  <key id="weight" for="edge" attr.name="weight" attr.type="string"/>',
        '  <key id="sanction_included" for="edge" attr.name="sanction_included" attr.type="boolean"/>',
        f'  <graph id="G" edgedefault="{"directed" if directed else "undirected"}">',
    ]
    for k, (code, name) in enumerate(registry.entries):
        out.append(f'    <node id="n{k}">')
        out.append(f'      <data key="code">{escape(code)}</data>')
        out.append(f'      <data key="name">{escape(name)}</data>')
        out.append("    </node>")
    for e, (i, j, u) in enumerate(edges):
        rec = _edge_record(registry, i, j, u, directed)
        out.append(f'    <edge id="e{e}" source={quoteattr(f"n{i}")} target={quoteattr(f"n{j}")}>')
        out.append(f'      <data key="rate">{rec["rate"]}</data>')
        out.append(f'      <data key="weight">{rec["weight"]}</data>')
        out.append(f'      <data key="sanction_included">{str(directed).lower()}</data>')
        out.append("    </edge>")
    out += ["  </graph>", "</graphml>", ""]
    return "\n".join(out)
