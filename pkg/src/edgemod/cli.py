"""Command-line front end.

Exit codes: 0 success, 2 malformed input, 3 violated invariant, 4 an oracle
cross-check under ``--verify`` disagreed beyond tolerance. Oracle reports go
to stderr so that ``--verify`` never changes the emitted results.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import oracle
from .errors import (EdgeModError, InvariantViolation, NetworkFormatError)
from .graph_model import (EdgeMod, Kind, apply_mod, build_network,
                          check_network, complete_graph,
                          diameter, erdos_renyi, fig2_network, grid_graph,
                          network_to_dict, path_graph, read_network,
                          write_json)
from .laplacian import (batch_coherence_delta, build_laplacian_kernel,
                        coherence, coherence_delta, delta_hinf_upper_bound,
                        greedy_grow)
from .stable import (batch_scan, build_kernel, delta_h2_lower_bound,
                     delta_hinf, greedy_gramian_improve, stability_margin)

EXIT_OK, EXIT_PARSE, EXIT_INVARIANT, EXIT_VERIFY = 0, 2, 3, 4




def fmt(x):
    """A number with 12 significant digits; ``inf``/``nan`` spelled out."""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.12g}"


def _json_num(x):
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    x = float(x)
    if not math.isfinite(x):
        return fmt(x)
    return float(f"{x:.12g}")


def _jsonify(obj):
    if isinstance(obj, dict):
        return {k: _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, (int, float, np.integer, np.floating, bool, np.bool_)):
        return _json_num(obj)
    return obj


class _Output:
    """Collects stdout text and writes it to ``--out`` or stdout at the end."""

    def __init__(self, path):
        self.path = path
        self.buf = io.StringIO()

    def write(self, text):
        self.buf.write(text)

    def line(self, key, value):
        self.buf.write(f"{key}: {value}\n")

    def flush(self):
        text = self.buf.getvalue()
        if self.path:
            Path(self.path).write_text(text)
        else:
            sys.stdout.write(text)


def _write_records(out, fmt_name, header, rows):
    if fmt_name == "json":
        out.write(json.dumps([_jsonify(dict(zip(header, r))) for r in rows],
                             indent=1) + "\n")
        return
    out.write(",".join(header) + "\n")
    for r in rows:
        out.write(",".join(fmt(v) for v in r) + "\n")


def _note(msg):
    print(msg, file=sys.stderr)


def _load(args, check=True, relaxed=False):
    return read_network(args.net, sidecar=args.sidecar, check=check,
                        require_rho_below_one=not relaxed)


def _close(a, b, rtol, atol=1e-12):
    return abs(a - b) <= rtol * max(abs(a), abs(b)) + atol


def _sample_pairs(rng, n, k, accept):
    """Up to *k* distinct ordered pairs ``s != t`` satisfying *accept*."""
    order = rng.permutation(n * n)
    picked = []
    for idx in order:
        s, t = divmod(int(idx), n)
        if s != t and accept(s, t):
            picked.append((s, t))
            if len(picked) == k:
                break
    return picked


def _require_seed(args):
    if args.seed is None:
        raise SystemExit(_usage_error("--seed is required for this command"))


def _usage_error(msg):
    _note(f"error: {msg}")
    return EXIT_PARSE


# ---------------------------------------------------------------- commands

def cmd_validate(args, out):
    net = _load(args, check=False)
    out.line("n", net.n)
    out.line("edges", net.n_edges)
    out.line("kind", net.kind.value)
    out.line("inputs", len(net.inputs))
    out.line("outputs", len(net.outputs))
    if net.kind is Kind.LAPLACIAN:
        rho_L = net.spectral_radius()
        out.line("rho_L", fmt(rho_L))
        out.line("rho_L_below_1", fmt(rho_L < 1.0))
    else:
        out.line("rho_A", fmt(net.spectral_radius()))
    out.line("connected", fmt(net.is_connected()))
    check_network(net)
    out.line("status", "ok")
    return EXIT_OK


def _verify_direct_scan(kernel, report, args):
    net = kernel.network
    rng = np.random.default_rng(args.seed)
    destab = {(int(s), int(t)) for s, t, d in
              zip(report.s, report.t, report.destabilizing) if d}
    pairs = _sample_pairs(rng, net.n, args.samples,
                          lambda s, t: (s, t) not in destab)
    bad = 0
    large = net.n > args.sweep_max_n
    mode = "dc" if large else "sweep"
    trunc = oracle.TruncationConfig(gramian=not large)
    _note(f"verify: {len(pairs)} sampled edges, w = {fmt(report.w)}, "
          f"hinf oracle = {mode}")
    _note("verify: s,t,hinf_formula,hinf_oracle,h2_bound,h2_oracle,ratio")
    for s, t in pairs:
        mod = EdgeMod(s, t, report.w)
        m = oracle.rebuild_and_measure(net, mod, trunc=trunc, hinf_mode=mode)
        h = delta_hinf(kernel, mod)
        b = delta_h2_lower_bound(kernel, mod)
        exact, tail = m.h2
        ratio = b / exact if exact > 0 else (1.0 if b == 0 else math.inf)
        ok = (m.stable and _close(h, m.hinf, args.tol)
              and b <= (exact + tail) * (1 + 1e-12))
        bad += not ok
        _note(f"verify: {s},{t},{fmt(h)},{fmt(m.hinf)},{fmt(b)},{fmt(exact)},"
              f"{fmt(ratio)}{'' if ok else ',MISMATCH'}")
    return bad


def _verify_laplacian_scan(kernel, report, args):
    net = kernel.network
    rng = np.random.default_rng(args.seed)
    Q = report.Q
    pairs = _sample_pairs(rng, net.n, args.samples,
                          lambda s, t: s < t and np.isfinite(Q[t, s]))
    bad = 0
    _note(f"verify: {len(pairs)} sampled pairs, w = {fmt(report.w)}")
    _note("verify: s,t,delta_formula,delta_oracle")
    for s, t in pairs:
        m = oracle.rebuild_and_measure(net, EdgeMod(s, t, report.w), norms=False)
        ok = m.stable and _close(Q[t, s], m.coherence_delta, args.tol)
        bad += not ok
        _note(f"verify: {s},{t},{fmt(Q[t, s])},{fmt(m.coherence_delta)}"
              f"{'' if ok else ',MISMATCH'}")
    return bad


def cmd_scan(args, out):
    net = _load(args, relaxed=args.relaxed)
    if net.kind is Kind.DIRECT:
        kernel = build_kernel(net)
        report = batch_scan(kernel, args.w, sort_by=args.sort,
                            descending=args.descending, jobs=args.jobs)
        _note(f"destabilizing: {report.n_destabilizing} of {len(report)} "
              f"({fmt(100.0 * report.n_destabilizing / max(len(report), 1))}%)")
        shown = report.head(args.top) if args.top else report
        header = ["s", "t", "margin", "destabilizing", "hinf", "h2_lower_bound"]
        _write_records(out, args.format, header, list(shown.rows()))
        bad = _verify_direct_scan(kernel, report, args) if args.verify else 0
    else:
        kernel = build_laplacian_kernel(net, require_rho_below_one=not args.relaxed)
        report = batch_coherence_delta(kernel, args.w,
                                       require_rho_below_one=not args.relaxed,
                                       jobs=args.jobs)
        _note(f"baseline coherence: {fmt(report.baseline)}")
        rows = [(s, t, report.w, d, ok) for s, t, d, ok in report.pairs()]
        if args.top:
            rows = rows[:args.top]
        header = ["s", "t", "w", "coherence_delta", "admissible"]
        _write_records(out, args.format, header, rows)
        bad = _verify_laplacian_scan(kernel, report, args) if args.verify else 0
    return _verify_exit(bad, args)


def _verify_exit(bad, args):
    if args.verify:
        _note(f"verify: {'ok' if bad == 0 else f'{bad} mismatches'}")
    return EXIT_VERIFY if bad else EXIT_OK


def cmd_grow(args, out):
    net = _load(args, relaxed=True)
    if args.mode == "coherence":
        if net.kind is not Kind.LAPLACIAN:
            raise InvariantViolation("coherence mode needs a Laplacian network")
        res = greedy_grow(net, args.w, args.budget, policy=args.policy)
        data = {
            "mode": "coherence", "w": args.w, "policy": args.policy,
            "edges": [[m.s, m.t] for m in res.mods],
            "trajectory": res.trajectory,
            "trajectory_plus_one": res.trajectory_plus_one,
            "diameters": res.diameters,
            "summary": {"coherence_before": res.trajectory[0],
                        "coherence_after": res.trajectory[-1],
                        "diameter_before": res.diameters[0],
                        "diameter_after": res.diameters[-1]},
        }
        rows = [(k, "" if k == 0 else res.mods[k - 1].s,
                 "" if k == 0 else res.mods[k - 1].t,
                 res.trajectory[k], res.diameters[k])
                for k in range(len(res.trajectory))]
        header = ["step", "s", "t", "coherence", "diameter"]
        bad = 0
        if args.verify:
            final = oracle.coherence_direct(res.network)
            ok = _close(final, res.trajectory[-1], args.tol)
            bad += not ok
            _note(f"verify: final coherence {fmt(res.trajectory[-1])} oracle "
                  f"{fmt(final)}{'' if ok else ' MISMATCH'}")
    else:
        if net.kind is not Kind.DIRECT:
            raise InvariantViolation("gramian mode needs a direct network")
        w = args.w
        res = greedy_gramian_improve(net, args.budget, w)
        data = {
            "mode": "gramian", "w": w,
            "edges": [[m.s, m.t] for m in res.mods],
            "weights": [m.w for m in res.mods],
            "bounds": res.bounds, "trajectory": res.traces,
            "summary": {"trace_before": res.traces[0],
                        "trace_after": res.traces[-1]},
        }
        rows = [(k, "" if k == 0 else res.mods[k - 1].s,
                 "" if k == 0 else res.mods[k - 1].t,
                 "" if k == 0 else res.mods[k - 1].w, res.traces[k])
                for k in range(len(res.traces))]
        header = ["step", "s", "t", "w", "output_gramian_trace"]
        bad = 0
        if args.verify and res.mods:
            cur = net
            for m in res.mods:
                cur = apply_mod(cur, m)
            h2 = oracle.h2_truncated(cur.system())
            ok = _close(h2.gramian_value, res.traces[-1], args.tol)
            bad += not ok
            _note(f"verify: final trace {fmt(res.traces[-1])} oracle "
                  f"{fmt(h2.gramian_value)}{'' if ok else ' MISMATCH'}")
    if args.format == "json":
        out.write(json.dumps(_jsonify(data), indent=1) + "\n")
    else:
        out.write(",".join(header) + "\n")
        for r in rows:
            out.write(",".join(v if v == "" else fmt(v) for v in r) + "\n")
    return _verify_exit(bad, args)


def _parse_nodes(text, n):
    if text is None:
        return None
    if text == "all":
        return list(range(n))
    return [int(v) for v in text.split(",") if v.strip()]


def cmd_generate(args, out):
    kind = args.generator
    if kind in ("er", "fig2"):
        _require_seed(args)
    if kind == "fig2":
        net = fig2_network(args.seed)
    elif kind == "er":
        n = args.n or 500
        net = erdos_renyi(n, args.p, args.rho, args.seed,
                          directed=not args.undirected,
                          inputs=_parse_nodes(args.inputs, n),
                          outputs=_parse_nodes(args.outputs, n))
    elif kind == "path":
        net = path_graph(args.n or 20, args.w)
    elif kind == "complete":
        net = complete_graph(args.n or 10, args.w)
    else:
        net = grid_graph(args.rows, args.cols, args.w)
    if args.out:
        write_json(net, args.out)
        _note(f"wrote {args.out}: n = {net.n}, edges = {net.n_edges}, "
              f"rho = {fmt(net.spectral_radius())}")
    else:
        sys.stdout.write(json.dumps(network_to_dict(net)) + "\n")
    return EXIT_OK


def cmd_coherence(args, out):
    net = _load(args, relaxed=args.relaxed)
    kernel = build_laplacian_kernel(net, require_rho_below_one=not args.relaxed)
    c = coherence(kernel)
    out.line("coherence", fmt(c))
    out.line("coherence_plus_one", fmt(c + 1.0))
    out.line("diameter", diameter(net))
    bad = 0
    if args.verify:
        direct = oracle.coherence_direct(net)
        ok = _close(c, direct, args.tol)
        bad += not ok
        _note(f"verify: direct inverse {fmt(direct)}{'' if ok else ' MISMATCH'}")
        if args.trials:
            _require_seed(args)
            est, se = oracle.coherence_monte_carlo(net, args.trials, args.seed)
            ok = abs(est - c) <= 3 * se
            bad += not ok
            _note(f"verify: monte carlo {fmt(est)} +/- {fmt(se)}"
                  f"{'' if ok else ' MISMATCH'}")
    return _verify_exit(bad, args)


def cmd_margin(args, out):
    net = _load(args, relaxed=True)
    s, t = args.s, args.t
    bad = 0
    if net.kind is Kind.DIRECT:
        kernel = build_kernel(net)
        m = stability_margin(kernel, s, t)
        out.line("margin", fmt(m))
        if args.w is not None:
            mod = EdgeMod(s, t, args.w)
            h = delta_hinf(kernel, mod)
            b = delta_h2_lower_bound(kernel, mod)
            out.line("hinf", fmt(h))
            out.line("h2_lower_bound", fmt(b))
            if args.verify:
                r = oracle.rebuild_and_measure(net, mod)
                exact, tail = r.h2
                ok = _close(h, r.hinf, args.tol) and b <= (exact + tail) * (1 + 1e-12)
                bad += not ok
                _note(f"verify: hinf oracle {fmt(r.hinf)}, h2 oracle "
                      f"{fmt(exact)} (tail {fmt(tail)}){'' if ok else ' MISMATCH'}")
        if args.verify and math.isfinite(m):
            lo = oracle.rebuild_and_measure(net, EdgeMod(s, t, 0.99 * m), norms=False)
            hi = oracle.rebuild_and_measure(net, EdgeMod(s, t, 1.01 * m), norms=False)
            ok = lo.spectral_radius < 1.0 and hi.spectral_radius >= 1.0 - 1e-8
            bad += not ok
            _note(f"verify: rho at 0.99 margin {fmt(lo.spectral_radius)}, at 1.01 "
                  f"margin {fmt(hi.spectral_radius)}{'' if ok else ' MISMATCH'}")
    else:
        kernel = build_laplacian_kernel(net, require_rho_below_one=False)
        if args.w is None:
            raise SystemExit(_usage_error("Laplacian networks need --w"))
        w = args.w
        d = coherence_delta(kernel, s, t, w, require_rho_below_one=False)
        out.line("coherence_delta", fmt(d))
        if kernel.rho_below_one:
            try:
                out.line("hinf_upper_bound",
                         fmt(delta_hinf_upper_bound(kernel, s, t, w)))
            except InvariantViolation as exc:
                _note(f"no H-infinity bound: {exc}")
        if args.verify:
            r = oracle.rebuild_and_measure(net, EdgeMod(s, t, w), norms=False)
            ok = _close(d, r.coherence_delta, args.tol)
            bad += not ok
            _note(f"verify: rebuilt delta {fmt(r.coherence_delta)}"
                  f"{'' if ok else ' MISMATCH'}")
    return _verify_exit(bad, args)


def _fixture_checks(tol):
    """Closed-form fixtures checked against the oracles; yields (name, ok, detail)."""
    chain = build_network(2, [(0, 1, 0.5)], [0], [1])
    k = build_kernel(chain)
    mod = EdgeMod(1, 0, 1.0)
    r = oracle.rebuild_and_measure(chain, mod)
    yield ("chain margin", _close(stability_margin(k, 1, 0), 2.0, 1e-12),
           fmt(stability_margin(k, 1, 0)))
    yield ("chain hinf", _close(delta_hinf(k, mod), r.hinf, tol), fmt(r.hinf))
    exact, tail = r.h2
    b = delta_h2_lower_bound(k, mod)
    yield ("chain h2", _close(b, exact, 1e-10) and b <= exact + tail, fmt(exact))
    p3 = path_graph(3, 0.2)
    lk = build_laplacian_kernel(p3)
    d = coherence_delta(lk, 0, 2, 0.2)
    r = oracle.rebuild_and_measure(p3, EdgeMod(0, 2, 0.2), norms=False)
    yield ("path_3 triangle", _close(d, r.coherence_delta, tol), fmt(d))
    p20 = path_graph(20, 0.2)
    c = coherence(build_laplacian_kernel(p20))
    yield ("path_20 coherence", _close(c, oracle.coherence_direct(p20), tol),
           fmt(c))


def cmd_verify_all(args, out):
    bad = 0
    if args.net is None:
        for name, ok, detail in _fixture_checks(args.tol):
            bad += not ok
            out.write(f"{'PASS' if ok else 'FAIL'} {name}: {detail}\n")
        return EXIT_VERIFY if bad else EXIT_OK
    args.verify = True
    if args.seed is None:
        args.seed = 0
    net = _load(args, relaxed=True)
    sink = io.StringIO()
    if net.kind is Kind.DIRECT:
        kernel = build_kernel(net)
        report = batch_scan(kernel, args.w)
        bad = _verify_direct_scan(kernel, report, args)
    else:
        kernel = build_laplacian_kernel(net, require_rho_below_one=False)
        report = batch_coherence_delta(kernel, args.w, require_rho_below_one=False)
        bad = _verify_laplacian_scan(kernel, report, args)
        direct = oracle.coherence_direct(net)
        ok = _close(coherence(kernel), direct, args.tol)
        bad += not ok
        sink.write(f"{'PASS' if ok else 'FAIL'} coherence: {fmt(direct)}\n")
    out.write(sink.getvalue())
    out.write(f"{'PASS' if bad == 0 else 'FAIL'} sampled edges: "
              f"{bad} mismatches\n")
    return EXIT_VERIFY if bad else EXIT_OK


# ------------------------------------------------------------------ parser

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--net", help="network file (JSON, or edge list)")
    common.add_argument("--sidecar", help="JSON metadata for an edge list")
    common.add_argument("--w", type=float, help="probe or edge weight")
    common.add_argument("--seed", type=int, help="random seed")
    common.add_argument("--out", help="write results here instead of stdout")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--verify", action="store_true",
                        help="cross-check against brute-force oracles")
    common.add_argument("--jobs", type=int, default=1)
    common.add_argument("--tol", type=float, default=1e-6,
                        help="relative tolerance for --verify")
    common.add_argument("--sweep-max-n", type=int, default=100,
                        help="above this many nodes --verify checks H-infinity "
                             "at theta = 0 only")

    p = argparse.ArgumentParser(
        prog="edgemod",
        description="Single-edge modification analysis for linear networks.")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("validate", parents=[common],
                        help="check a network file and report its invariants")
    sp.set_defaults(func=cmd_validate, need_net=True)

    sp = sub.add_parser("scan", parents=[common],
                        help="score every single-edge addition")
    sp.add_argument("--sort", default="margin",
                    choices=("margin", "hinf", "h2_lower_bound"))
    sp.add_argument("--descending", action="store_true")
    sp.add_argument("--top", type=int, help="keep only the first rows")
    sp.add_argument("--samples", type=int, default=30,
                    help="edges sampled by --verify")
    sp.add_argument("--relaxed", action="store_true",
                    help="Laplacian: allow rho(L) < 2 instead of rho(L) < 1")
    sp.set_defaults(func=cmd_scan, need_net=True, need_w=True)

    sp = sub.add_parser("grow", parents=[common], help="greedy edge design")
    sp.add_argument("--budget", type=int, required=True)
    sp.add_argument("--mode", choices=("coherence", "gramian"),
                    default="coherence")
    sp.add_argument("--policy", choices=("stable", "strict"),
                    default="stable")
    sp.set_defaults(func=cmd_grow, need_net=True, need_w=True)

    sp = sub.add_parser("generate", parents=[common], help="write a network")
    sp.add_argument("generator", choices=("er", "fig2", "path", "complete",
                                          "grid"))
    sp.add_argument("--n", type=int)
    sp.add_argument("--p", type=float, default=0.02)
    sp.add_argument("--rho", type=float, default=0.9)
    sp.add_argument("--rows", type=int, default=4)
    sp.add_argument("--cols", type=int, default=4)
    sp.add_argument("--undirected", action="store_true")
    sp.add_argument("--inputs", help="comma-separated node list or 'all'")
    sp.add_argument("--outputs", help="comma-separated node list or 'all'")
    sp.set_defaults(func=cmd_generate, w_default=0.2)

    sp = sub.add_parser("coherence", parents=[common],
                        help="coherence of a Laplacian network")
    sp.add_argument("--trials", type=int,
                    help="Monte-Carlo trials under --verify (needs --seed)")
    sp.add_argument("--relaxed", action="store_true")
    sp.set_defaults(func=cmd_coherence, need_net=True)

    sp = sub.add_parser("margin", parents=[common],
                        help="single-edge margin and norms")
    sp.add_argument("--s", type=int, required=True)
    sp.add_argument("--t", type=int, required=True)
    sp.set_defaults(func=cmd_margin, need_net=True)

    sp = sub.add_parser("verify-all", parents=[common],
                        help="oracle cross-checks on fixtures or a network")
    sp.add_argument("--samples", type=int, default=30)
    sp.set_defaults(func=cmd_verify_all, w_default=0.2)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "need_net", False) and args.net is None:
        parser.error(f"{args.command} needs --net")
    if args.w is None:
        if getattr(args, "need_w", False):
            parser.error(f"{args.command} needs --w")
        args.w = getattr(args, "w_default", None)
    if args.jobs < 1:
        parser.error("--jobs must be at least 1")
    out = _Output(args.out if args.command != "generate" else None)
    try:
        code = args.func(args, out)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (NetworkFormatError, OSError) as exc:
        _note(f"error: {type(exc).__name__}: {exc}")
        out.flush()
        return EXIT_PARSE
    except EdgeModError as exc:
        _note(f"error: {type(exc).__name__}: {exc}")
        out.flush()
        return EXIT_INVARIANT
    except (ValueError, TypeError) as exc:
        # bad argument values or a command used on the wrong network kind
        _note(f"error: {exc}")
        out.flush()
        return EXIT_PARSE
    out.flush()
    return code


if __name__ == "__main__":
    sys.exit(main())
