"""JSON document schema (algebroidkit/1): loading, validation, serialization.

Documents are UTF-8 JSON with a top-level "schema" field.  Polynomials are
arrays of {"coeff": "p/q", "exponents": [e...]} terms; groupoids carry
explicit multiplication tables and affine actions {"matrix": ..., "offset":
...}.  Loading validates invariants (antisymmetry of structure indices,
shape constraints) and names the offending field on failure; serialization
is deterministic so that load -> dump -> load is the identity.
"""

import json
from fractions import Fraction

from .exactalg import PolyFunction, format_fraction
from .algebroid import (AlgebroidPresentation, AlgebroidMorphismData, Chart,
                        RepresentationPresentation)
from .pullback import EtaleMap, SplitSubmersion, SubmersionDatum
from .groupoid import DeskGroupoid, GroupoidAlgebroid, GroupoidRepresentation
from .poisson import PolyVectorField

SCHEMA = "algebroidkit/1"


class DocumentError(Exception):
    """Malformed document; the message names the offending field."""


def _need(doc, field, kind=None):
    if field not in doc:
        raise DocumentError(f"missing field {field!r}")
    value = doc[field]
    if kind is not None and not isinstance(value, kind):
        raise DocumentError(f"field {field!r} has the wrong type")
    return value


def load_poly(obj, chart_dim, field="polynomial"):
    if not isinstance(obj, list):
        raise DocumentError(f"{field}: polynomial must be a list of terms")
    terms = {}
    for pos, term in enumerate(obj):
        if not isinstance(term, dict):
            raise DocumentError(f"{field}[{pos}]: term must be an object")
        coeff = term.get("coeff")
        exps = term.get("exponents")
        if coeff is None or exps is None:
            raise DocumentError(f"{field}[{pos}]: term needs coeff and exponents")
        try:
            q = Fraction(coeff)
        except (ValueError, ZeroDivisionError):
            raise DocumentError(f"{field}[{pos}].coeff: not a rational")
        if not isinstance(exps, list) or len(exps) != chart_dim:
            raise DocumentError(
                f"{field}[{pos}].exponents: need {chart_dim} entries")
        if any(not isinstance(e, int) or e < 0 for e in exps):
            raise DocumentError(f"{field}[{pos}].exponents: non-negative integers only")
        key = tuple(exps)
        terms[key] = terms.get(key, Fraction(0)) + q
    return PolyFunction(chart_dim, terms)


def dump_poly(poly):
    out = []
    for exps in sorted(poly.terms, key=lambda e: (sum(e), e)):
        out.append({"coeff": format_fraction(poly.terms[exps]),
                    "exponents": list(exps)})
    return out


def _load_polymat(obj, rows, cols, chart_dim, field):
    if not isinstance(obj, list) or len(obj) != rows:
        raise DocumentError(f"{field}: need {rows} rows")
    out = []
    for i, row in enumerate(obj):
        if not isinstance(row, list) or len(row) != cols:
            raise DocumentError(f"{field}[{i}]: need {cols} entries")
        out.append([load_poly(row[j], chart_dim, f"{field}[{i}][{j}]")
                    for j in range(cols)])
    return out


def _dump_polymat(mat):
    return [[dump_poly(x) for x in row] for row in mat]


def load_algebroid(doc):
    dim = _need(doc, "chart_dim", int)
    rank = _need(doc, "rank", int)
    if dim < 0 or rank < 0:
        raise DocumentError("chart_dim and rank must be non-negative")
    chart = Chart(dim)
    if rank:
        anchor = _load_polymat(_need(doc, "anchor", list), rank, dim, dim, "anchor")
    else:
        anchor = []
    structure = {}
    for key, coeffs in doc.get("structure", {}).items():
        parts = key.split(",")
        if len(parts) != 2:
            raise DocumentError(f"structure key {key!r}: expected 'i,j'")
        try:
            i, j = int(parts[0]), int(parts[1])
        except ValueError:
            raise DocumentError(f"structure key {key!r}: indices must be integers")
        if i == j:
            raise DocumentError(
                f"structure key {key!r}: c^k_(i,i) must vanish (antisymmetry)")
        if not 0 <= i < j < rank:
            raise DocumentError(
                f"structure key {key!r}: need 0 <= i < j < rank (antisymmetry "
                f"fixes the other order)")
        if not isinstance(coeffs, list) or len(coeffs) != rank:
            raise DocumentError(f"structure[{key!r}]: need {rank} coefficients")
        structure[(i, j)] = [load_poly(coeffs[k], dim, f"structure[{key!r}][{k}]")
                             for k in range(rank)]
    return AlgebroidPresentation(chart, rank, anchor, structure)


def dump_algebroid(A):
    doc = {"schema": SCHEMA, "kind": "algebroid",
           "chart_dim": A.chart.dim, "rank": A.rank,
           "anchor": _dump_polymat(A.anchor)}
    structure = {}
    for (i, j), coeffs in sorted(A.structure.items()):
        structure[f"{i},{j}"] = [dump_poly(c) for c in coeffs]
    doc["structure"] = structure
    return doc


def load_split_submersion(doc):
    src = _need(doc, "source_dim", int)
    tgt = _need(doc, "target_dim", int)
    if tgt > src:
        raise DocumentError("target_dim exceeds source_dim")
    phi_doc = _need(doc, "phi", list)
    inv_doc = _need(doc, "phi_inv", list)
    if len(phi_doc) != src or len(inv_doc) != src:
        raise DocumentError("phi and phi_inv need one component per source coordinate")
    phi = [load_poly(p, src, f"phi[{i}]") for i, p in enumerate(phi_doc)]
    phi_inv = [load_poly(p, src, f"phi_inv[{i}]") for i, p in enumerate(inv_doc)]
    try:
        return SplitSubmersion(Chart(src), Chart(tgt), phi, phi_inv)
    except Exception as exc:
        raise DocumentError(f"split submersion rejected: {exc}")


def dump_split_submersion(f):
    return {"type": "split", "source_dim": f.source.dim, "target_dim": f.target.dim,
            "phi": [dump_poly(p) for p in f.phi],
            "phi_inv": [dump_poly(p) for p in f.phi_inv]}


def load_etale_map(doc):
    dim = _need(doc, "dim", int)
    comps = [load_poly(p, dim, f"components[{i}]")
             for i, p in enumerate(_need(doc, "components", list))]
    if len(comps) != dim:
        raise DocumentError("components: need one per coordinate")
    jinv = _load_polymat(_need(doc, "jacobian_inverse", list), dim, dim, dim,
                         "jacobian_inverse")
    try:
        return EtaleMap(Chart(dim), Chart(dim), comps, jinv)
    except Exception as exc:
        raise DocumentError(f"etale map rejected: {exc}")


def load_submersion(doc):
    kind = _need(doc, "type", str)
    if kind == "split":
        return load_split_submersion(doc)
    if kind == "etale":
        return load_etale_map(doc)
    raise DocumentError(f"submersion type {kind!r} unknown")


def load_affine_action(doc, chart, field):
    matrix = _need(doc, "matrix", list)
    offset = _need(doc, "offset", list)
    n = chart.dim
    if len(matrix) != n or any(len(r) != n for r in matrix):
        raise DocumentError(f"{field}.matrix: need {n}x{n} rationals")
    if len(offset) != n:
        raise DocumentError(f"{field}.offset: need {n} rationals")
    try:
        mat = [[Fraction(x) for x in row] for row in matrix]
        off = [Fraction(x) for x in offset]
    except (ValueError, ZeroDivisionError):
        raise DocumentError(f"{field}: entries must be rationals")
    try:
        return EtaleMap.affine(chart, chart, mat, off)
    except Exception as exc:
        raise DocumentError(f"{field}: affine action rejected: {exc}")


def dump_affine_action(em):
    n = em.source.dim
    matrix = [[format_fraction(em.components[q].terms.get(
        tuple(1 if t == p else 0 for t in range(n)), Fraction(0)))
        for p in range(n)] for q in range(n)]
    offset = [format_fraction(em.components[q].constant_value()) for q in range(n)]
    return {"matrix": matrix, "offset": offset}


def load_groupoid(doc):
    dim = _need(doc, "chart_dim", int)
    chart = Chart(dim)
    elements = _need(doc, "elements", list)
    table_doc = _need(doc, "table", dict)
    table = {}
    for key, value in table_doc.items():
        parts = key.split(",")
        if len(parts) != 2:
            raise DocumentError(f"table key {key!r}: expected 'g,h'")
        table[(_parse_label(parts[0]), _parse_label(parts[1]))] = _parse_label(value)
    actions_doc = doc.get("actions", {})
    actions = {}
    for g in elements:
        key = str(g)
        if key in actions_doc:
            actions[g] = load_affine_action(actions_doc[key], chart, f"actions[{key}]")
        elif dim == 0:
            actions[g] = EtaleMap.identity(chart)
        else:
            raise DocumentError(f"actions[{key}]: missing for a chart-based groupoid")
    return DeskGroupoid(chart, elements, table, actions)


def _parse_label(x):
    if isinstance(x, int):
        return x
    try:
        return int(x)
    except (TypeError, ValueError):
        raise DocumentError(f"group element label {x!r} must be an integer")


def dump_groupoid(G):
    doc = {"chart_dim": G.chart.dim, "elements": list(G.elements),
           "table": {f"{g},{h}": G.table[(g, h)]
                     for g in G.elements for h in G.elements}}
    if G.chart.dim > 0:
        doc["actions"] = {str(g): dump_affine_action(G.actions[g])
                          for g in G.elements}
    return doc


def load_groupoid_algebroid(doc):
    G = load_groupoid(_need(doc, "groupoid", dict))
    A = load_algebroid(_need(doc, "algebroid", dict))
    if A.chart.dim != G.chart.dim:
        raise DocumentError("algebroid: chart does not match the groupoid's")
    psi_doc = _need(doc, "psi", dict)
    psi = {}
    for g in G.elements:
        key = str(g)
        if key not in psi_doc:
            raise DocumentError(f"psi[{key}]: missing arrow matrix")
        psi[g] = _load_polymat(psi_doc[key], A.rank, A.rank, A.chart.dim,
                               f"psi[{key}]")
    return GroupoidAlgebroid(G, A, psi)


def dump_groupoid_algebroid(GA):
    return {"schema": SCHEMA, "kind": "groupoid-algebroid",
            "groupoid": dump_groupoid(GA.groupoid),
            "algebroid": {k: v for k, v in dump_algebroid(GA.A).items()
                          if k not in ("schema", "kind")},
            "psi": {str(g): _dump_polymat(m) for g, m in sorted(GA.psi.items(),
                                                                key=lambda kv: str(kv[0]))}}


def load_morphism(doc):
    source = load_algebroid(_need(doc, "source", dict))
    target = load_algebroid(_need(doc, "target", dict))
    base_doc = _need(doc, "base_map", list)
    if len(base_doc) != target.chart.dim:
        raise DocumentError("base_map: need one component per target coordinate")
    base = [load_poly(p, source.chart.dim, f"base_map[{i}]")
            for i, p in enumerate(base_doc)]
    matrix = _load_polymat(_need(doc, "matrix", list), source.rank, target.rank,
                           source.chart.dim, "matrix")
    return AlgebroidMorphismData.from_matrix(source, target, base, matrix)


def load_bivector(doc):
    dim = _need(doc, "chart_dim", int)
    chart = Chart(dim)
    comps = {}
    for key, poly in doc.get("components", {}).items():
        parts = key.split(",")
        if len(parts) != 2:
            raise DocumentError(f"components key {key!r}: expected 'i,j'")
        i, j = int(parts[0]), int(parts[1])
        if not 0 <= i < j < dim:
            raise DocumentError(f"components key {key!r}: need 0 <= i < j < dim")
        comps[(i, j)] = load_poly(poly, dim, f"components[{key!r}]")
    return PolyVectorField(chart, 2, comps)


def dump_bivector(Pi):
    return {"schema": SCHEMA, "kind": "bivector", "chart_dim": Pi.chart.dim,
            "components": {f"{i},{j}": dump_poly(p)
                           for (i, j), p in sorted(Pi.components.items())}}


def load_symplectic(doc):
    dim = _need(doc, "chart_dim", int)
    comps = {}
    for key, poly in doc.get("components", {}).items():
        parts = key.split(",")
        i, j = int(parts[0]), int(parts[1])
        if not 0 <= i < j < dim:
            raise DocumentError(f"components key {key!r}: need 0 <= i < j < dim")
        comps[(i, j)] = load_poly(poly, dim, f"components[{key!r}]")
    inverse = _load_polymat(_need(doc, "inverse", list), dim, dim, dim, "inverse")
    return Chart(dim), comps, inverse


def load_submersion_datum(doc):
    f = load_split_submersion(_need(doc, "submersion", dict))
    A = load_algebroid(_need(doc, "algebroid", dict))
    if A.chart.dim != f.source.dim:
        raise DocumentError("algebroid: must live over the submersion's source")
    n, k = f.target.dim, f.rel_dim
    rank = A.rank + k
    psi = _load_polymat(_need(doc, "psi", list), rank, rank, n + 2 * k, "psi")
    return SubmersionDatum(f, A, psi)


def load_cover_datum(doc):
    from .pullback import CoverDatum, CoverOverlap, CoverTriple
    pieces_doc = _need(doc, "pieces", dict)
    pieces = {label: load_algebroid(sub) for label, sub in pieces_doc.items()}
    overlaps = {}
    for entry in doc.get("overlaps", []):
        pair = tuple(_need(entry, "pair", list))
        if len(pair) != 2:
            raise DocumentError("overlaps: pair must list two piece labels")
        dim = _need(entry, "chart_dim", int)
        chart = Chart(dim)
        inclusions = {}
        for label in pair:
            key = f"into_{label}"
            sub = _need(entry, key, dict)
            inclusions[label] = load_affine_inclusion(sub, chart,
                                                      pieces[label].chart, key)
        overlaps[frozenset(pair)] = CoverOverlap(chart, inclusions)
    transitions = {}
    for entry in doc.get("transitions", []):
        i, j = _need(entry, "to", str), _need(entry, "from", str)
        pair = frozenset((i, j))
        if pair not in overlaps:
            raise DocumentError(f"transitions: no overlap for ({i},{j})")
        rank = pieces[i].rank
        chart = overlaps[pair].chart
        transitions[(i, j)] = _load_polymat(_need(entry, "matrix", list),
                                            rank, rank, chart.dim, "matrix")
    triples = {}
    for entry in doc.get("triples", []):
        labels = tuple(_need(entry, "labels", list))
        if len(labels) != 3:
            raise DocumentError("triples: labels must list three pieces")
        dim = _need(entry, "chart_dim", int)
        chart = Chart(dim)
        to_pair = {}
        for a in range(3):
            for b in range(a + 1, 3):
                key = f"into_{labels[a]}_{labels[b]}"
                sub = _need(entry, key, list)
                pair_chart = overlaps[frozenset((labels[a], labels[b]))].chart
                comps = [load_poly(p, dim, f"{key}[{t}]") for t, p in enumerate(sub)]
                if len(comps) != pair_chart.dim:
                    raise DocumentError(f"{key}: wrong number of components")
                to_pair[frozenset((labels[a], labels[b]))] = comps
        triples[frozenset(labels)] = CoverTriple(chart, to_pair)
    return CoverDatum(pieces, overlaps, transitions, triples)


def load_affine_inclusion(doc, source_chart, target_chart, field):
    matrix = _need(doc, "matrix", list)
    offset = _need(doc, "offset", list)
    n, m = source_chart.dim, target_chart.dim
    if len(matrix) != m or any(len(r) != n for r in matrix):
        raise DocumentError(f"{field}.matrix: need {m}x{n} rationals")
    if len(offset) != m:
        raise DocumentError(f"{field}.offset: need {m} rationals")
    if m != n:
        raise DocumentError(f"{field}: overlap inclusions must preserve dimension")
    try:
        mat = [[Fraction(x) for x in row] for row in matrix]
        off = [Fraction(x) for x in offset]
    except (ValueError, ZeroDivisionError):
        raise DocumentError(f"{field}: entries must be rationals")
    try:
        return EtaleMap.affine(source_chart, target_chart, mat, off)
    except Exception as exc:
        raise DocumentError(f"{field}: inclusion rejected: {exc}")


def _load_descend_task(doc):
    datum = load_submersion_datum(_need(doc, "datum", dict))
    section_doc = _need(doc, "section", list)
    if len(section_doc) != datum.f.source.dim:
        raise DocumentError("section: need one component per source coordinate")
    section = [load_poly(p, datum.f.target.dim, f"section[{i}]")
               for i, p in enumerate(section_doc)]
    return datum, section


def load_document(path):
    """Parse and validate a document file; returns (kind, loaded object)."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise DocumentError(f"cannot read {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise DocumentError(f"malformed JSON: {exc}")
    if not isinstance(doc, dict):
        raise DocumentError("document must be a JSON object")
    if doc.get("schema") != SCHEMA:
        raise DocumentError(f"schema: expected {SCHEMA!r}, got {doc.get('schema')!r}")
    kind = _need(doc, "kind", str)
    loaders = {
        "algebroid": load_algebroid,
        "morphism": load_morphism,
        "pullback-task": lambda d: (load_submersion(_need(d, "submersion", dict)),
                                    load_algebroid(_need(d, "algebroid", dict))),
        "submersion-descent": load_submersion_datum,
        "cover-descent": load_cover_datum,
        "descend-task": _load_descend_task,
        "groupoid-algebroid": load_groupoid_algebroid,
        "bivector": load_bivector,
        "symplectic-form": load_symplectic,
    }
    if kind not in loaders:
        raise DocumentError(f"kind: unknown document kind {kind!r}")
    return kind, loaders[kind](doc)
