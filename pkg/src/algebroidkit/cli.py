"""Command line interface: task dispatch and deterministic report emission.

    algebroidkit <task> <input.json> [--max-degree N] [--grading NAME]
                 [--cap N] [--json] [--out PATH]

Exit status 0 means valid/success, 1 invalid with witness, 2 usage or
parse error.  Reports are byte-identical across runs on identical input;
wall-clock timing goes to stderr only.
"""

import argparse
import hashlib
import json
import sys
import time

from .exactalg import ExactAlgError
from .algebroid import (AlgebroidError, GradingError, Verdict, check_morphism,
                        verify_algebroid, algebroid_cohomology, anchor_morphism)
from .pullback import (EtaleMap, SplitSubmersion, PullbackError,
                       etale_pullback, pullback_algebroid, verify_descent,
                       descend_along_section, descent_compatibility_square)
from .groupoid import (GroupoidError, build_la_groupoid, check_bang_vacant,
                       check_vacant, f1_f2_roundtrip_iso, f2_recover,
                       verify_la_groupoid, verify_groupoid_algebroid)
from .stackcoh import (build_cech_complex, invariant_complex,
                       compare_total_vs_invariants)
from .poisson import (PoissonError, PoissonStructure, verify_poisson,
                      cotangent_algebroid, linear_poisson_on_dual,
                      symplectic_to_poisson, cochain_map_from_morphism)
from .exactalg import complex_cohomology, total_cohomology
from .documents import (DocumentError, dump_algebroid, dump_bivector,
                        load_document)

TASKS = ("verify-algebroid", "verify-morphism", "pullback", "descend",
         "verify-descent", "build-la-groupoid", "roundtrip-f1f2",
         "cech-cohomology", "invariant-cohomology", "poisson-verify",
         "cotangent", "linear-poisson", "symplectic")


class TaskFailure(Exception):
    """Domain-level invalidity: exit status 1 with a witness in the report."""


def _digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        h.update(fh.read())
    return h.hexdigest()


def _expect_kind(kind, wanted, task):
    if kind != wanted:
        raise DocumentError(
            f"task {task} needs a {wanted!r} document, got {kind!r}")


def _verdict_lines(report, verdict, label="verdict"):
    report[label] = "valid" if verdict.valid else "invalid"
    if not verdict.valid:
        report["witness"] = verdict.witness or ""
        if verdict.residue is not None:
            report["residue"] = str(verdict.residue)


def _algebroid_summary(A):
    return {"chart_dim": A.chart.dim, "rank": A.rank,
            "anchor": [[str(x) for x in row] for row in A.anchor],
            "structure": {f"{i},{j}": [str(c) for c in coeffs]
                          for (i, j), coeffs in sorted(A.structure.items())}}


def run_task(task, path, max_degree=None, grading="none", cap=0):
    """Dispatch a task; returns (report dict, exit status)."""
    kind, obj = load_document(path)
    report = {"task": task, "input": path, "input_sha256": _digest(path)}
    status = 0

    if task == "verify-algebroid":
        _expect_kind(kind, "algebroid", task)
        verdict = verify_algebroid(obj)
        _verdict_lines(report, verdict)
        status = 0 if verdict.valid else 1

    elif task == "verify-morphism":
        _expect_kind(kind, "morphism", task)
        for side, pres in (("source", obj.source), ("target", obj.target)):
            v = verify_algebroid(pres)
            if not v.valid:
                raise TaskFailure(f"{side} presentation invalid: {v.witness}")
        verdict = check_morphism(obj)
        _verdict_lines(report, verdict)
        status = 0 if verdict.valid else 1

    elif task == "pullback":
        _expect_kind(kind, "pullback-task", task)
        sub, A = obj
        if isinstance(sub, SplitSubmersion):
            pb = pullback_algebroid(sub, A)
            out = pb.presentation
            report["relative_dimension"] = sub.rel_dim
        else:
            out = etale_pullback(sub, A)
            report["relative_dimension"] = 0
        report["result"] = _algebroid_summary(out)
        v = verify_algebroid(out)
        _verdict_lines(report, v, "result_verdict")
        status = 0 if v.valid else 1

    elif task == "verify-descent":
        if kind not in ("submersion-descent", "cover-descent"):
            raise DocumentError(f"task {task} needs a descent document, got {kind!r}")
        verdict, certificate = verify_descent(obj)
        _verdict_lines(report, verdict)
        report["certificate"] = certificate
        status = 0 if verdict.valid else 1

    elif task == "descend":
        _expect_kind(kind, "descend-task", task)
        datum, section = obj
        result = descend_along_section(datum.f, section, datum)
        report["descended"] = _algebroid_summary(result.descended)
        report["certificate"] = result.certificate
        square = descent_compatibility_square(datum.f, datum, result)
        _verdict_lines(report, square, "compatibility_square")
        status = 0 if square.valid else 1

    elif task == "build-la-groupoid":
        _expect_kind(kind, "groupoid-algebroid", task)
        L = build_la_groupoid(obj)
        verdict = verify_la_groupoid(L)
        _verdict_lines(report, verdict, "la_invariants")
        bang = check_bang_vacant(L)
        _verdict_lines(report, bang, "bang_vacant")
        vac = check_vacant(L)
        _verdict_lines(report, vac, "vacant")
        report["arrow_components"] = len(L.groupoid.elements)
        status = 0 if (verdict.valid and bang.valid) else 1

    elif task == "roundtrip-f1f2":
        _expect_kind(kind, "groupoid-algebroid", task)
        from .exactalg import polymat_eq
        L = build_la_groupoid(obj)
        GA2 = f2_recover(L)
        on_nose = all(polymat_eq(GA2.psi[g], obj.psi[g])
                      for g in obj.groupoid.elements)
        report["f2_after_f1_identity"] = "exact" if on_nose else "failed"
        iso = f1_f2_roundtrip_iso(L)
        report["f1_after_f2_isomorphism"] = "verified" if iso is not None else "failed"
        status = 0 if (on_nose and iso is not None) else 1

    elif task == "cech-cohomology":
        _expect_kind(kind, "groupoid-algebroid", task)
        degree = 3 if max_degree is None else max_degree
        caps = max(degree + 1, 1)
        cdc = build_cech_complex(obj, caps, caps, grading, cap)
        total = total_cohomology(cdc.double, degree)
        report["betti"] = [{"degree": d, "betti": b, "reliable": rel}
                           for d, (b, rel) in enumerate(total)]
        status = 0

    elif task == "invariant-cohomology":
        _expect_kind(kind, "groupoid-algebroid", task)
        cplx, _ = invariant_complex(obj, grading, cap)
        report["dims"] = {str(g): {str(k): v for k, v in sorted(ds.items())}
                          for g, ds in sorted(cplx.dims.items())}
        betti = complex_cohomology(cplx)
        report["betti"] = {str(g): bs for g, bs in sorted(betti.items())}
        status = 0

    elif task == "poisson-verify":
        _expect_kind(kind, "bivector", task)
        result = verify_poisson(obj)
        if isinstance(result, PoissonStructure):
            report["verdict"] = "valid"
        else:
            _verdict_lines(report, result)
            status = 1

    elif task == "cotangent":
        _expect_kind(kind, "bivector", task)
        result = verify_poisson(obj)
        if not isinstance(result, PoissonStructure):
            _verdict_lines(report, result)
            return report, 1
        cot = cotangent_algebroid(result)
        report["result"] = _algebroid_summary(cot)
        v = verify_algebroid(cot)
        _verdict_lines(report, v, "result_verdict")
        status = 0 if v.valid else 1

    elif task == "linear-poisson":
        _expect_kind(kind, "algebroid", task)
        P = linear_poisson_on_dual(obj)
        report["bivector"] = {f"{i},{j}": str(p) for (i, j), p in
                              sorted(P.bivector.components.items())}
        report["verdict"] = "valid"
        status = 0

    elif task == "symplectic":
        _expect_kind(kind, "symplectic-form", task)
        chart, comps, inverse = obj
        result = symplectic_to_poisson(chart, comps, inverse)
        report["bivector"] = {f"{i},{j}": str(p) for (i, j), p in
                              sorted(result.poisson.bivector.components.items())}
        report["anchor_iso"] = "certified"
        cap_used = cap if cap else 2
        maps, src_c, tgt_c = cochain_map_from_morphism(
            anchor_morphism(result.algebroid),
            grading if grading != "none" else "total-degree", cap_used)
        bs, bt = complex_cohomology(src_c), complex_cohomology(tgt_c)
        report["transport_betti_equal"] = bs == bt
        report["betti"] = {str(g): b for g, b in sorted(bt.items())}
        status = 0 if bs == bt else 1

    else:
        raise DocumentError(f"unknown task {task!r}")
    return report, status


def render_text(report):
    lines = ["algebroidkit report"]
    for key, value in report.items():
        if isinstance(value, (dict, list)):
            lines.append(f"{key}:")
            blob = json.dumps(value, indent=2, sort_keys=True)
            lines.extend("  " + ln for ln in blob.splitlines())
        else:
            lines.append(f"{key}: {value}")
    return "\n".join(lines) + "\n"


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="algebroidkit",
        description="exact verification and cohomology for finitely "
                    "presented Lie algebroids")
    parser.add_argument("task", choices=TASKS)
    parser.add_argument("input", help="input document (JSON)")
    parser.add_argument("--max-degree", type=int, default=None)
    parser.add_argument("--grading", default="none",
                        choices=("none", "total-degree", "poly-degree"))
    parser.add_argument("--cap", type=int, default=0,
                        help="grading cap for chart-based complexes")
    parser.add_argument("--json", action="store_true", dest="as_json")
    parser.add_argument("--out", default=None)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    started = time.monotonic()
    try:
        report, status = run_task(args.task, args.input,
                                  max_degree=args.max_degree,
                                  grading=args.grading, cap=args.cap)
    except (DocumentError,) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except TaskFailure as exc:
        report = {"task": args.task, "input": args.input,
                  "verdict": "invalid", "witness": str(exc)}
        status = 1
    except (AlgebroidError, PullbackError, GroupoidError, PoissonError,
            GradingError, ExactAlgError) as exc:
        report = {"task": args.task, "input": args.input,
                  "verdict": "invalid", "witness": str(exc)}
        status = 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    body = (json.dumps(report, indent=2, sort_keys=True) + "\n"
            if args.as_json else render_text(report))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(body)
    else:
        sys.stdout.write(body)
    print(f"elapsed: {time.monotonic() - started:.3f}s", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
