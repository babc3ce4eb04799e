"""Model files in, reports out.

Model file: one JSON object with exactly the keys ``variables`` (the causal
order), ``directed`` and ``bidirected`` (lists of two-name lists).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import InputError
from .estimand import render, render_regression, to_tree
from .graph import CausalGraph
from .robustness import RobustnessReport
from .targets import TargetEdge

REPORT_VERSION = 1
_KEYS = ("variables", "directed", "bidirected")


@dataclass(frozen=True)
class ModelSpec:
    variables: tuple[str, ...]
    directed: tuple[tuple[str, str], ...]
    bidirected: tuple[tuple[str, str], ...]

    def to_graph(self) -> CausalGraph:
        return CausalGraph(self.variables, frozenset(self.directed), frozenset(self.bidirected))


def parse_model(text: str) -> ModelSpec:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise InputError("model file must be a JSON object")
    unknown = sorted(set(data) - set(_KEYS))
    if unknown:
        raise InputError(f"unknown keys {unknown}; expected {list(_KEYS)}")
    if "variables" not in data:
        raise InputError("missing key 'variables'")

    variables = data["variables"]
    if not isinstance(variables, list) or not variables:
        raise InputError("variables: expected a non-empty list of names")
    pos = {}
    for i, v in enumerate(variables):
        if not isinstance(v, str) or not v.strip():
            raise InputError(f"variables[{i}]: expected a non-empty string, got {v!r}")
        if v in pos:
            raise InputError(f"variables[{i}]: duplicate name {v!r}")
        pos[v] = i

    directed = _edges(data, "directed", pos, ordered=True)
    bidirected = _edges(data, "bidirected", pos, ordered=False)
    return ModelSpec(tuple(variables), tuple(directed), tuple(bidirected))


def _edges(data: dict, key: str, pos: dict, ordered: bool) -> list[tuple[str, str]]:
    raw = data.get(key, [])
    if not isinstance(raw, list):
        raise InputError(f"{key}: expected a list of [name, name] pairs")
    out, seen = [], {}
    for i, item in enumerate(raw):
        where = f"{key}[{i}]"
        if not (isinstance(item, list) and len(item) == 2):
            raise InputError(f"{where}: expected a [name, name] pair, got {item!r}")
        a, b = item
        for j, v in enumerate(item):
            if v not in pos:
                raise InputError(f"{where}[{j}]: unknown variable {v!r}")
        if a == b:
            raise InputError(f"{where}: self-loop on {a!r}")
        if ordered and pos[a] > pos[b]:
            raise InputError(f"{where}: {a}->{b} violates the causal order")
        norm = (a, b) if ordered or pos[a] < pos[b] else (b, a)
        if norm in seen:
            raise InputError(f"{where}: duplicate of {key}[{seen[norm]}]")
        seen[norm] = i
        out.append((a, b))
    return out


def load_model(path: str | Path) -> CausalGraph:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read model file {path}: {exc.strerror}") from None
    except UnicodeDecodeError:
        raise InputError(f"model file {path} is not valid UTF-8") from None
    return parse_model(text).to_graph()


def graph_to_dict(g: CausalGraph) -> dict:
    key = lambda p: (g.index(p[0]), g.index(p[1]))
    return {
        "variables": list(g.variables),
        "directed": [list(e) for e in sorted(g.directed, key=key)],
        "bidirected": [list(e) for e in sorted(g.bidirected, key=key)],
    }


def _est(e) -> dict:
    return {"text": render(e), "regression": render_regression(e), "tree": to_tree(e)}


def report_to_dict(r: RobustnessReport) -> dict:
    if isinstance(r.target, TargetEdge):
        kind, target = "edge", {"x": r.target.x, "y": r.target.y}
    else:
        kind, target = "total_effect", {"x": r.target.x, "z": r.target.z}
    class_of = {i: c for c, members in enumerate(r.estimand_classes) for i in members}
    out = {
        "report_version": REPORT_VERSION,
        "query": str(r.target),
        "target": {"kind": kind, **target},
        "status": r.status,
        "model": graph_to_dict(r.graph),
        "msas": [
            {
                "assumptions": [a.label for a in m.assumptions.sorted()],
                "estimand": _est(m.estimand),
                "estimand_class": class_of[i],
            }
            for i, m in enumerate(r.msas)
        ],
        "maximal_iv_pairs": None
        if r.maximal_pairs is None
        else [{"w": p.w, "z": list(p.z), "estimand": _est(e)} for p, e in r.maximal_pairs],
        "maximal_iv_pair_count": None if r.maximal_pairs is None else len(r.maximal_pairs),
        "maximal_iv_pair_classes": r.maximal_pair_classes,
        "degrees": {"m": r.m_corroborated, "k": r.k_identified, "df": r.df},
        "constraints": [{"lhs": _est(a), "rhs": _est(b)} for a, b in r.constraints],
        "relevance": [{"assumption": a.label, "relevant": v} for a, v in r.relevance.items()],
        "relevant_submodel": None
        if r.relevant_submodel is None
        else {
            **graph_to_dict(r.relevant_submodel),
            "retained_assumptions": [a.label for a in r.retained_assumptions],
        },
        "caveats": list(r.caveats),
        "oracle": r.oracle,
        "config": {
            "budget": r.config.budget,
            "max_z": r.config.max_z,
            "oracle": r.config.oracle,
            "seed": r.config.seed,
            "n_probes": r.config.n_probes,
        },
    }
    return out


def dumps_report(r: RobustnessReport) -> str:
    return json.dumps(report_to_dict(r), indent=2, sort_keys=True) + "\n"


def _estimand_line(e) -> str:
    text, reg = render(e), render_regression(e)
    return text if reg == text else f"{text}   [{reg}]"


def render_text(r: RobustnessReport) -> str:
    lines = [f"QUERY {r.target}", "", "STATUS", f"  {r.status}", "", "MSAS"]
    if not r.msas:
        lines.append("  (none)")
    class_of = {i: c for c, members in enumerate(r.estimand_classes) for i in members}
    for i, m in enumerate(r.msas, 1):
        labels = ", ".join(a.label for a in m.assumptions.sorted())
        lines.append(f"  A{i} = {{{labels}}}")
        lines.append(f"      estimand (class {class_of[i - 1]}): {_estimand_line(m.estimand)}")

    lines += ["", "MAXIMAL IV-PAIRS"]
    if r.maximal_pairs is None:
        lines.append("  (not applicable to total-effect queries)")
    elif not r.maximal_pairs:
        lines.append("  (none)")
    else:
        for p, e in r.maximal_pairs:
            lines.append(f"  {p}: {_estimand_line(e)}")
        lines.append(
            f"  count = {len(r.maximal_pairs)}, distinct estimands = {r.maximal_pair_classes}"
        )

    lines += ["", "DEGREES"]
    if r.identified:
        lines.append(f"  m = {r.m_corroborated}  (corroborating msas)")
        lines.append(f"  k = {r.k_identified}  (distinct estimands)")
        lines.append(f"  df = {r.df}")
    else:
        lines.append("  undefined (target not identified)")

    lines += ["", "CONSTRAINTS"]
    if not r.constraints:
        lines.append("  (none)")
    for a, b in r.constraints:
        lines.append(f"  {render(a)} = {render(b)}")

    lines += ["", "RELEVANCE"]
    for a, v in r.relevance.items():
        lines.append(f"  {a.label:<22} {'relevant' if v else 'irrelevant'}")
    if not r.relevance:
        lines.append("  (model has no assumptions)")

    lines += ["", "RELEVANT SUBMODEL"]
    if r.relevant_submodel is None:
        lines.append("  (none: target not identified)")
    else:
        lines.append(f"  edges: {r.relevant_submodel}")
        kept = ", ".join(a.label for a in r.retained_assumptions) or "(none)"
        lines.append(f"  retained assumptions: {kept}")

    lines += ["", "CAVEATS"]
    if not r.caveats:
        lines.append("  (none)")
    lines += [f"  - {c}" for c in r.caveats]
    return "\n".join(lines) + "\n"
