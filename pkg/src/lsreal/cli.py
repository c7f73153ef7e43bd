"""Command-line interface and the JSON file formats.

Commands: ``lsreal markov | hankel | realize | reduce | simulate | verify``.
Exit codes: 0 success (or verified equivalent), 1 verified inequivalent,
2 input/dimension error, 3 algorithm declined (no realization).

System files carry the per-mode matrix triples as row-major nested arrays
plus the tagged initial states; Markov files carry one entry per
(series index, mode word) pair, complete up to their stated order.  Floats
are serialized as shortest round-trip decimals.  ``LSREAL_RANK_TOL`` sets a
default relative rank tolerance.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional

import numpy as np

from . import analysis, hankel, realize as realize_mod
from .errors import (
    LsrealError,
    NoUniqueSolution,
    RankConditionFailed,
    ShiftInconsistent,
)
from .hankel import RankTolerance
from .lss import (
    Alphabet,
    InitialTag,
    InputChannel,
    Lss,
    MarkovFamily,
    PiecewiseConstantInput,
    Realization,
    markov_from_lss,
    simulate,
)
from .words import enumerate_words, word_count, word_rank

__all__ = [
    "main",
    "load_system",
    "save_system",
    "load_markov",
    "save_markov",
]

_ALGORITHM_DECLINED = (NoUniqueSolution, ShiftInconsistent, RankConditionFailed)


class InputError(LsrealError):
    """Malformed or inconsistent input file / arguments (exit code 2)."""


# ---------------------------------------------------------------------------
# file formats


def _system_to_dict(r: Realization) -> dict:
    sys_ = r.sys
    return {
        "modes": list(sys_.alphabet.modes),
        "n": sys_.n,
        "m": sys_.m,
        "p": sys_.p,
        "systems": {
            q: {
                "A": sys_.A[q].tolist(),
                "B": sys_.B[q].tolist(),
                "C": sys_.C[q].tolist(),
            }
            for q in sys_.alphabet.modes
        },
        "initial_states": {t: r.mu[t].tolist() for t in r.tags},
    }


def _system_from_dict(doc: dict) -> Realization:
    try:
        modes = [str(q) for q in doc["modes"]]
        n, m, p = int(doc["n"]), int(doc["m"]), int(doc["p"])
        alphabet = Alphabet(tuple(modes))
        A, B, C = {}, {}, {}
        for q in modes:
            rec = doc["systems"][q]
            A[q] = np.asarray(rec["A"], dtype=float).reshape(n, n)
            B[q] = np.asarray(rec["B"], dtype=float).reshape(n, m)
            C[q] = np.asarray(rec["C"], dtype=float).reshape(p, n)
        mu = {
            str(t): np.asarray(x, dtype=float).reshape(n)
            for t, x in doc.get("initial_states", {}).items()
        }
        return Realization(Lss(alphabet, A, B, C), mu)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"bad system file: {exc}") from exc


def save_system(path: str, r: Realization) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_system_to_dict(r), fh, indent=1)
        fh.write("\n")


def load_system(path: str) -> Realization:
    return _system_from_dict(_load_json(path))


def _index_to_dict(j) -> dict:
    if isinstance(j, InputChannel):
        return {"kind": "input", "q0": j.mode, "j": j.channel}
    return {"kind": "state", "f": j.name}


def _index_from_dict(rec: dict):
    kind = rec.get("kind")
    if kind == "input":
        return InputChannel(str(rec["q0"]), int(rec["j"]))
    if kind == "state":
        return InitialTag(str(rec["f"]))
    raise InputError(f"unknown index kind {kind!r}")


def _markov_to_dict(mk: MarkovFamily) -> dict:
    words = enumerate_words(mk.alphabet, mk.max_order)
    entries = []
    for pos, j in enumerate(mk.indices):
        for wi, w in enumerate(words):
            entries.append(
                {
                    "index": _index_to_dict(j),
                    "word": list(w),
                    "value": mk.values[pos, wi].tolist(),
                }
            )
    return {
        "modes": list(mk.alphabet.modes),
        "p": mk.p,
        "m": mk.m,
        "max_order": mk.max_order,
        "entries": entries,
    }


def _markov_from_dict(doc: dict) -> MarkovFamily:
    try:
        alphabet = Alphabet(tuple(str(q) for q in doc["modes"]))
        p, m, max_order = int(doc["p"]), int(doc["m"]), int(doc["max_order"])
        entries = doc["entries"]
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"bad Markov file: {exc}") from exc
    tags = sorted(
        {str(e["index"]["f"]) for e in entries if e.get("index", {}).get("kind") == "state"}
    )
    D = alphabet.size
    J = D * m + len(tags)
    W = word_count(D, max_order)
    values = np.full((J, W, p * D), np.nan)
    probe = MarkovFamily.zero(alphabet, p, m, max_order, tags)
    for e in entries:
        try:
            j = _index_from_dict(e["index"])
            w = alphabet.check_word([str(q) for q in e["word"]])
            if len(w) > max_order:
                raise InputError(f"word {w} exceeds max_order={max_order}")
            vec = np.asarray(e["value"], dtype=float)
            if vec.shape != (p * D,):
                raise InputError(
                    f"value for {e['index']} at {e['word']} has length {vec.size}, "
                    f"expected {p * D}"
                )
            values[probe.index_position(j), word_rank(w, alphabet)] = vec
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"bad Markov entry: {exc}") from exc
    if np.isnan(values).any():
        raise InputError("Markov file is incomplete: some (index, word) entries missing")
    if not np.all(np.isfinite(values)):
        raise InputError("Markov file has non-finite values")
    return MarkovFamily(alphabet, p, m, max_order, tuple(tags), values)


def save_markov(path: str, mk: MarkovFamily) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_markov_to_dict(mk), fh, indent=1)
        fh.write("\n")


def load_markov(path: str) -> MarkovFamily:
    return _markov_from_dict(_load_json(path))


def _load_json(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise InputError(f"{path}: expected a JSON object at top level")
    return doc


def _rank_tol(arg: Optional[float]) -> Optional[RankTolerance]:
    if arg is not None:
        return RankTolerance(relative=arg)
    env = os.environ.get("LSREAL_RANK_TOL")
    if env:
        try:
            return RankTolerance(relative=float(env))
        except ValueError as exc:
            raise InputError(f"bad LSREAL_RANK_TOL value {env!r}") from exc
    return None


# ---------------------------------------------------------------------------
# commands


def _cmd_markov(args) -> int:
    r = load_system(args.system)
    mk = markov_from_lss(r, args.max_order)
    save_markov(args.output, mk)
    print(f"wrote {args.output}: {len(mk.indices)} series up to order {mk.max_order}")
    return 0


def _cmd_hankel(args) -> int:
    mk = load_markov(args.markov)
    block = hankel.build_block(mk, args.L, args.M)
    rank = hankel.numerical_rank(block.data, _rank_tol(args.rank_tol))
    rows, cols = block.shape
    print(f"H({args.L},{args.M}): {rows} x {cols}, rank {rank}")
    if args.output:
        doc = {
            "L": args.L,
            "M": args.M,
            "rows": [{"word": list(w), "component": i} for w, i in block.row_ix.rows],
            "cols": [
                {"word": list(w), "index": _index_to_dict(j)}
                for w, j in block.col_ix.cols
            ],
            "data": block.data.tolist(),
            "rank": rank,
        }
        with open(args.output, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=1)
            fh.write("\n")
    return 0


def _cmd_realize(args) -> int:
    mk = load_markov(args.markov)
    if 2 * args.N + 1 > mk.max_order:
        raise InputError(
            f"N={args.N} needs Markov order {2 * args.N + 1}, file has {mk.max_order}"
        )
    tol = _rank_tol(args.rank_tol)
    report = realize_mod.check_rank_condition(mk, args.N, tol)
    print(
        f"rank condition at N={report.N}: "
        f"rank H(N,N)={report.r_NN}, H(N+1,N)={report.r_N1N}, "
        f"H(N,N+1)={report.r_NN1}, holds={report.holds}"
    )
    if args.algorithm == "column":
        result = realize_mod.realize_columns(mk, args.N, tol, args.residual_tol)
    else:
        result = realize_mod.realize_factor(mk, args.N, tol, args.residual_tol)
    save_system(args.output, result)
    print(f"wrote {args.output}: dimension {result.sys.n}")
    if not report.complete_hint:
        print(
            "warning: completeness unverified; the result is only guaranteed to "
            f"match Markov parameters up to order {2 * args.N + 1}",
            file=sys.stderr,
        )
    return 0


def _cmd_reduce(args) -> int:
    r = load_system(args.system)
    reduced = realize_mod.reduce(r, args.N, _rank_tol(args.rank_tol), args.residual_tol)
    save_system(args.output, reduced)
    print(
        f"wrote {args.output}: dimension {reduced.sys.n} "
        f"(moment-matched through order {2 * args.N + 1})"
    )
    return 0


def _parse_switching(spec: str) -> list[tuple[str, float]]:
    steps = []
    for part in spec.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            q, t = part.rsplit(":", 1)
            steps.append((q.strip(), float(t)))
        except ValueError as exc:
            raise InputError(f"bad switching step {part!r}; expected mode:duration") from exc
    if not steps:
        raise InputError("empty switching sequence")
    return steps


def _parse_input(args, m: int, total: float) -> PiecewiseConstantInput:
    doc = None
    if args.input:
        try:
            doc = json.loads(args.input)
        except json.JSONDecodeError as exc:
            raise InputError(f"--input is not valid JSON: {exc}") from exc
    elif args.input_file:
        doc = _load_json(args.input_file)
    if doc is None:
        return PiecewiseConstantInput.zero(m, max(total, 1.0))
    try:
        return PiecewiseConstantInput(
            tuple(float(b) for b in doc["breakpoints"]),
            tuple(tuple(float(x) for x in np.atleast_1d(v)) for v in doc["values"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"bad input signal: {exc}") from exc


def _cmd_simulate(args) -> int:
    r = load_system(args.system)
    steps = _parse_switching(args.switching)
    total = sum(t for _, t in steps)
    u = _parse_input(args, r.sys.m, total)
    samples = []
    t_cum = 0.0
    # run the prefix schedules so each sample reports the output at a switch
    for k in range(1, len(steps) + 1):
        y, x = simulate(r, args.tag, u, steps[:k])
        t_cum = sum(t for _, t in steps[:k])
        samples.append(
            {"time": t_cum, "mode": steps[k - 1][0], "y": np.asarray(y).tolist()}
        )
    doc = {"tag": args.tag, "samples": samples, "x_final": np.asarray(x).tolist()}
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=1)
            fh.write("\n")
    else:
        json.dump(doc, sys.stdout, indent=1)
        print()
    return 0


def _looks_like_markov(doc: dict) -> bool:
    return "entries" in doc


def _print_certificate(name: str, r: Realization) -> None:
    cert = analysis.certify_minimal(r)
    print(
        f"{name}: dim {cert.dim}, reachable span {cert.reach_dim}, "
        f"unobservable kernel {cert.obs_kernel_dim}, minimal={cert.is_minimal}"
    )


def _cmd_verify(args) -> int:
    r1 = load_system(args.file_a)
    doc_b = _load_json(args.file_b)
    tol = args.tol
    if _looks_like_markov(doc_b):
        mk_b = _markov_from_dict(doc_b)
        order = args.order if args.order is not None else mk_b.max_order
        order = min(order, mk_b.max_order)
        if r1.tags != mk_b.tags or r1.sys.m != mk_b.m or r1.sys.p != mk_b.p:
            raise InputError("system and Markov file are incompatible")
        mk_a = markov_from_lss(r1, order)
        try:
            first = analysis.markov_match_order(
                mk_a, _truncate_family(mk_b, order), tol
            )
        except LsrealError as exc:
            raise InputError(str(exc)) from exc
        _print_certificate(args.file_a, r1)
    else:
        r2 = _system_from_dict(doc_b)
        order = (
            args.order
            if args.order is not None
            else max(r1.sys.n + r2.sys.n - 1, 0)
        )
        try:
            first = analysis.lss_match_order(r1, r2, order, tol)
        except LsrealError as exc:
            raise InputError(str(exc)) from exc
        _print_certificate(args.file_a, r1)
        _print_certificate(args.file_b, r2)
    if first is None:
        print(f"equivalent through order {order}")
        return 0
    print(f"first mismatching Markov order: {first}")
    return 1


def _truncate_family(mk: MarkovFamily, order: int) -> MarkovFamily:
    if order >= mk.max_order:
        return mk
    W = word_count(mk.D, order)
    return MarkovFamily(mk.alphabet, mk.p, mk.m, order, mk.tags, mk.values[:, :W])


# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="lsreal",
        description="Partial realizations of linear switched systems from Markov parameters.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("markov", help="compute Markov parameters of a system")
    p.add_argument("system")
    p.add_argument("--max-order", "-N", dest="max_order", type=int, required=True)
    p.add_argument("--output", "-o", required=True)
    p.set_defaults(func=_cmd_markov)

    p = sub.add_parser("hankel", help="assemble a Hankel block and report its rank")
    p.add_argument("markov")
    p.add_argument("-L", type=int, required=True)
    p.add_argument("-M", type=int, required=True)
    p.add_argument("--rank-tol", type=float, default=None)
    p.add_argument("--output", "-o", default=None)
    p.set_defaults(func=_cmd_hankel)

    p = sub.add_parser("realize", help="compute a partial realization from Markov data")
    p.add_argument("markov")
    p.add_argument("-N", type=int, required=True)
    p.add_argument("--algorithm", choices=("factor", "column"), default="factor")
    p.add_argument("--rank-tol", type=float, default=None)
    p.add_argument("--residual-tol", type=float, default=1e-8)
    p.add_argument("--output", "-o", required=True)
    p.set_defaults(func=_cmd_realize)

    p = sub.add_parser("reduce", help="moment-matching model reduction")
    p.add_argument("system")
    p.add_argument("-N", type=int, required=True)
    p.add_argument("--rank-tol", type=float, default=None)
    p.add_argument("--residual-tol", type=float, default=1e-8)
    p.add_argument("--output", "-o", required=True)
    p.set_defaults(func=_cmd_reduce)

    p = sub.add_parser("simulate", help="simulate a switching schedule")
    p.add_argument("system")
    p.add_argument("--tag", required=True)
    p.add_argument("--switching", required=True, help="comma list of mode:duration")
    p.add_argument("--input", default=None, help="inline JSON piecewise-constant input")
    p.add_argument("--input-file", default=None)
    p.add_argument("--output", "-o", default=None)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("verify", help="compare two systems or a system against Markov data")
    p.add_argument("file_a")
    p.add_argument("file_b")
    p.add_argument("--order", "-K", type=int, default=None)
    p.add_argument("--tol", type=float, default=1e-8)
    p.set_defaults(func=_cmd_verify)

    return ap


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _ALGORITHM_DECLINED as exc:
        print(f"no realization: {exc}", file=sys.stderr)
        return 3
    except LsrealError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
