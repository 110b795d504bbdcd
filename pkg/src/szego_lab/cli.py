"""Command-line entry point: ``szego-lab <subcommand> ...``.

Exit codes: 0 success, 1 usage or input error, 2 domain error (JSON on stderr).
"""
import argparse
import csv
import io
import json
import sys

import mpmath

from . import gsets, harness
from .analysis import pade_poles, prony_fit, radius_or_cutoff
from .errors import SzegoLabError
from .inverse import alpha_check_2414, alpha_check_freud, alphas_from_moments, moments_from_weight
from .numerics import (PowerSeries, Prec, cnum_pair, dump_series, load_power_series, parse_complex,
                       series_from_csv, series_from_json, series_to_csv, series_to_records)
from .opuc import ExponentialModel, ExponentialSequence, Explicit, family, phi_upto, phi_values
from .szego import SzegoData, Weight, q3_poles, q3_term, r_minus_S_laurent

DEFAULT_BITS = 256


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write("%s: error: %s\n" % (self.prog, message))
        raise SystemExit(1)


# -- argument helpers ---------------------------------------------------------------

def _common():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--precision-bits", type=int, default=None, help="working precision (default 256)")
    p.add_argument("--out", help="write output to this file instead of stdout")
    p.add_argument("--format", choices=("json", "csv"), default=None)
    return p


def _family_opts():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--family", help="rogers-szego | single-moment | zero | explicit | exponential")
    p.add_argument("--q", type=float, help="Rogers-Szegő parameter")
    p.add_argument("--a", type=float, help="single-moment parameter")
    p.add_argument("--alphas", help="file with explicit coefficients (n,re,im CSV or JSON)")
    p.add_argument("--model", help="model.json for the exponential family or a correction")
    p.add_argument("--params", action="append", default=[], metavar="K=V", help="extra family parameters")
    return p


def _prec(args, default=DEFAULT_BITS):
    bits = args.precision_bits or default
    if bits < 64:
        raise UsageError("--precision-bits must be at least 64")
    return Prec(bits)


def _read(path):
    if path == "-":
        return sys.stdin.read()
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise UsageError("cannot read %s: %s" % (path, exc))


def _parse_params(items):
    out = {}
    for item in items:
        for part in item.split(","):
            if not part.strip():
                continue
            if "=" not in part:
                raise UsageError("--params expects k=v, got %r" % part)
            k, v = part.split("=", 1)
            try:
                out[k.strip()] = float(v)
            except ValueError:
                out[k.strip()] = v.strip()
    return out


def _load_alpha_values(text, prec):
    text = text.strip()
    if text.startswith("["):
        data = json.loads(text)
        if data and isinstance(data[0], dict):
            coeffs, _ = series_from_json(text, prec)
            return list(coeffs)
        with prec.work():
            return [mpmath.mpc(*[mpmath.mpf(str(x)) for x in v]) if isinstance(v, list) else mpmath.mpc(v)
                    for v in data]
    if text.startswith("{"):
        data = json.loads(text)
        if "alphas" in data:
            return _load_alpha_values(json.dumps(data["alphas"]), prec)
        coeffs, _ = series_from_json(text, prec)
        return list(coeffs)
    coeffs, _ = series_from_csv(text, prec)
    return list(coeffs)


def _load_model(path, prec):
    return ExponentialModel.from_dict(json.loads(_read(path)), prec)


def _sequence(args, prec, required=True):
    params = _parse_params(args.params)
    if args.q is not None:
        params["q"] = args.q
    if args.a is not None:
        params["a"] = args.a
    name = args.family
    if name is None:
        if args.alphas:
            name = "explicit"
        elif required:
            raise UsageError("--family is required")
        else:
            return None
    name = name.replace("_", "-").lower()
    if name == "explicit":
        if not args.alphas:
            raise UsageError("--family explicit needs --alphas FILE")
        return Explicit.from_values(_load_alpha_values(_read(args.alphas), prec), prec)
    if name == "exponential":
        if not args.model:
            raise UsageError("--family exponential needs --model FILE")
        return ExponentialSequence(_load_model(args.model, prec))
    try:
        return family(name, prec, **params)
    except ValueError as exc:
        raise UsageError(str(exc))


def _weight(args, seq, prec):
    weight = args.weight
    if weight is None:
        if seq is None:
            raise UsageError("--weight or --family is required")
        if seq.kind == "rogers-szego":
            return Weight.rogers_szego(seq.q)
        if seq.kind == "single-moment":
            return Weight.single_moment(seq.a)
        return Weight.from_sequence(seq, prec=prec)
    name = weight.split(":", 1)[1] if weight.startswith("builtin:") else weight
    if name == "single-moment":
        return Weight.single_moment(args.a if args.a is not None else 0.8)
    if name == "rogers-szego":
        return Weight.rogers_szego(args.q if args.q is not None else 0.25)
    if name == "constant":
        return Weight.constant(1)
    raise UsageError("unknown weight %r (builtin:single-moment, builtin:rogers-szego, builtin:constant)" % weight)


def _emit(args, text):
    if not text.endswith("\n"):
        text += "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json(obj):
    return json.dumps(obj, indent=2, sort_keys=True)


def _series_out(args, obj, default="csv"):
    _emit(args, dump_series(obj, args.format or default))


# -- subcommands -----------------------------------------------------------------------

def cmd_alphas(args):
    prec = _prec(args)
    seq = _sequence(args, prec)
    vals = seq.alphas(args.n, prec)
    _series_out(args, PowerSeries(tuple(vals), prec))


def cmd_phi(args):
    prec = _prec(args)
    seq = _sequence(args, prec)
    if args.z is not None:
        with prec.work():
            z = parse_complex(args.z)
        phis, stars = phi_values(seq, z, args.n, prec)
        _emit(args, _json({"n": args.n, "z": cnum_pair(z, prec), "phi": cnum_pair(phis[-1], prec),
                           "phistar": cnum_pair(stars[-1], prec)}))
        return
    p = phi_upto(seq, args.n, prec)[-1]
    if (args.format or "json") == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "phi_re", "phi_im", "phistar_re", "phistar_im"])
        for k, (a, b) in enumerate(zip(p.phi, p.phistar)):
            w.writerow([k] + cnum_pair(a, prec) + cnum_pair(b, prec))
        _emit(args, buf.getvalue())
    else:
        _emit(args, _json({"n": p.n, "phi": series_to_records(p.phi, prec),
                           "phistar": series_to_records(p.phistar, prec),
                           "kappa": cnum_pair(p.kappa, prec)[0]}))


def cmd_dseries(args):
    prec = _prec(args)
    sd = SzegoData.from_sequence(_sequence(args, prec), args.n, prec)
    _series_out(args, sd.dinv)


def cmd_sseries(args):
    prec = _prec(args)
    sd = SzegoData.from_sequence(_sequence(args, prec), args.n, prec)
    _series_out(args, sd.S)


def cmd_rminus_s(args):
    prec = _prec(args)
    sd = SzegoData.from_sequence(_sequence(args, prec), args.n, prec)
    correction = _load_model(args.correction, prec) if args.correction else None
    sl = r_minus_S_laurent(sd, args.rho, args.samples, args.method, correction)
    if (args.format or "csv") == "csv":
        _series_out(args, sl)
        return
    est, note = radius_or_cutoff(sl)
    meta = {k: v for k, v in sl.meta.items() if isinstance(v, (int, float, str))}
    _emit(args, _json({"coeffs": series_to_records(sl.coeffs, prec, sl.n_min), "meta": meta,
                       "radius": est.as_dict() if est else note}))


def cmd_q3(args):
    prec = _prec(args)
    if not args.model:
        raise UsageError("q3 needs --model FILE")
    model = _load_model(args.model, prec)
    with prec.work():
        z = parse_complex(args.z)
        val = q3_term(model, z, part=args.part, form=args.form)
        poles = q3_poles(model)
    _emit(args, _json({"z": cnum_pair(z, prec), "value": cnum_pair(val, prec), "part": args.part,
                       "form": args.form,
                       "poles": {k: [cnum_pair(p, prec) for p in v] for k, v in poles.items()}}))


def cmd_fit_prony(args):
    prec = _prec(args)
    if args.family:
        vals = _sequence(args, prec).alphas(args.count, prec)
    elif args.alphas:
        vals = _load_alpha_values(_read(args.alphas), prec)
    else:
        raise UsageError("fit-prony needs --alphas FILE or --family")
    fit = prony_fit(vals, args.kmax, start=args.start, prec=prec)
    _emit(args, _json(fit.to_dict(prec)))


def cmd_pade_poles(args):
    prec = _prec(args)
    if args.series:
        series = load_power_series(_read(args.series), prec)
    else:
        series = SzegoData.from_sequence(_sequence(args, prec), args.n, prec).dinv
    report = pade_poles(series, args.m)
    _emit(args, _json(report.to_dict(prec)))


def _load_points(text):
    data = json.loads(text)
    if isinstance(data, dict) and "poles" in data:
        pts = [p["z"] if isinstance(p, dict) else p for p in data["poles"]]
        return [complex(float(p[0]), float(p[1])) for p in pts], {}
    if isinstance(data, dict):
        pts = data.get("points", [])
        extra = {k: data[k] for k in ("rmax", "eps") if k in data}
    else:
        pts, extra = data, {}
    return [complex(float(p[0]), float(p[1])) if isinstance(p, list) else complex(p) for p in pts], extra


def cmd_gset(args):
    pts, extra = _load_points(_read(args.points))
    rmax = args.rmax if args.rmax is not None else extra.get("rmax")
    if rmax is None:
        raise UsageError("gset needs --rmax")
    eps = args.eps if args.eps is not None else extra.get("eps", gsets.DEFAULT_EPS)
    T = gsets.ExteriorSet.build(pts, float(rmax), float(eps))
    if args.layer == "all":
        out = gsets.g_full(T)
    elif args.layer == "g3":
        out = gsets.g3(T)
    else:
        try:
            k = int(args.layer)
        except ValueError:
            raise UsageError("--layer must be all, g3 or a positive integer")
        out = gsets.g_layer(T, k)
    _emit(args, _json(out.to_dict()))


def cmd_mingen(args):
    pts, extra = _load_points(_read(args.points))
    rmax = args.rmax if args.rmax is not None else extra.get("rmax")
    if rmax is None:
        raise UsageError("mingen needs --rmax or a set file with rmax")
    eps = args.eps if args.eps is not None else extra.get("eps", gsets.DEFAULT_EPS)
    Q = gsets.ExteriorSet.build(pts, float(rmax), float(eps))
    _emit(args, _json(gsets.minimal_generators(Q).to_dict()))


def cmd_invert(args):
    prec = _prec(args)
    seq = _sequence(args, prec, required=False) if args.weight is None else None
    w = _weight(args, seq, prec)
    ms = moments_from_weight(w, args.n, M=args.nodes, normalize=args.normalize, prec=prec)
    vals = alphas_from_moments(ms)
    if (args.format or "csv") == "csv":
        _emit(args, series_to_csv(vals, prec))
    else:
        _emit(args, _json({"alphas": series_to_records(vals, prec), "moments": ms.meta}))


def cmd_crosscheck(args):
    prec = _prec(args)
    if args.family is None and not args.alphas:
        args.family = "single-moment"
    seq = _sequence(args, prec)
    sd = SzegoData.from_sequence(seq, args.degree, prec)
    w = _weight(args, seq, prec)
    fn = alpha_check_freud if args.formula == "freud" else alpha_check_2414
    val = fn(args.n, sd, w, args.nodes)
    truth = seq.alpha(args.n, prec)
    with prec.work():
        err = abs(val - truth)
    _emit(args, _json({"formula": args.formula, "n": args.n, "value": cnum_pair(val, prec),
                       "alpha": cnum_pair(truth, prec), "error": mpmath.nstr(err, 6)}))


def _cell(x):
    return x if isinstance(x, str) else json.dumps(x)


def _report_csv(reports):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["scenario", "family", "criterion", "expected", "measured", "tol", "pass"])
    for r in reports:
        fam = r.get("inputs", {}).get("family") or ""
        if "error" in r:
            w.writerow([r["scenario"], fam, r["error"]["error"], "", r["error"]["message"], "", "fail"])
        for c in r["criteria"]:
            w.writerow([r["scenario"], fam, c["name"], c["expected"], _cell(c["measured"]), _cell(c["tol"]),
                        "pass" if c["pass"] else "fail"])
    return buf.getvalue()


def cmd_verify(args):
    bits = args.precision_bits
    fam = args.family
    params = _parse_params(args.params)
    if args.q is not None:
        params["q"] = args.q
    if args.a is not None:
        params["a"] = args.a
    if fam and not params:
        params = dict(dict(harness.FAMILIES).get(fam, {}))
    if args.scenario == "all":
        reports = harness.run_all(fam, params, bits, jobs=args.jobs)
    else:
        reports = [r.to_dict() for r in harness.run_scenario(args.scenario, fam, params, bits)]
    if not args.with_runtime:
        for r in reports:
            r.pop("runtime_ms", None)
    text = _report_csv(reports) if args.format == "csv" else _json(reports)
    if args.json:
        with open(args.json, "w") as fh:
            fh.write(_json(reports) + "\n")
    _emit(args, text)
    failed = [r["scenario"] for r in reports if not r["pass"]]
    if failed:
        sys.stderr.write(json.dumps({"error": "CriteriaFailed", "message": "some criteria failed",
                                     "scenarios": failed}) + "\n")
        return 2
    return 0


def cmd_report(args):
    if args.input:
        reports = json.loads(_read(args.input))
        reports = reports if isinstance(reports, list) else [reports]
    else:
        reports = harness.run_all(prec=args.precision_bits, jobs=args.jobs)
        for r in reports:
            r.pop("runtime_ms", None)
    if args.format == "json":
        _emit(args, _json(reports))
    else:
        _emit(args, _report_csv(reports))
    return 0 if all(r["pass"] for r in reports) else 2


# -- parser -------------------------------------------------------------------------------

def build_parser():
    common, fam = _common(), _family_opts()
    parser = _Parser(prog="szego-lab", description="Meromorphic Szegő functions and Verblunsky asymptotics.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def add(name, fn, parents, help_):
        p = sub.add_parser(name, parents=parents, help=help_)
        p.set_defaults(func=fn)
        return p

    p = add("alphas", cmd_alphas, [common, fam], "Verblunsky coefficients alpha_0..alpha_{n-1}")
    p.add_argument("--n", type=int, default=40)

    p = add("phi", cmd_phi, [common, fam], "monic orthogonal polynomial Phi_n and its reversal")
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--z", help="evaluate at this point instead of printing coefficients")

    for name, fn, what in (("dseries", cmd_dseries, "Taylor coefficients of d(z)^-1"),
                           ("sseries", cmd_sseries, "Taylor coefficients of S(z)")):
        p = add(name, fn, [common, fam], what)
        p.add_argument("--n", type=int, default=200)

    p = add("rminus-s", cmd_rminus_s, [common, fam], "Laurent coefficients of r - S on a circle")
    p.add_argument("--rho", type=float, default=1.5)
    p.add_argument("--samples", type=int, default=None, help="FFT size (power of two)")
    p.add_argument("--n", type=int, default=200, help="series degree")
    p.add_argument("--method", choices=("both", "convolution", "samples"), default="both")
    p.add_argument("--correction", help="model.json whose q3 outer part is subtracted")

    p = add("q3", cmd_q3, [common], "evaluate the q3 correction term")
    p.add_argument("--model", required=True)
    p.add_argument("--z", required=True)
    p.add_argument("--part", choices=("full", "outer", "inner"), default="full")
    p.add_argument("--form", choices=("corrected", "printed"), default="corrected")

    p = add("fit-prony", cmd_fit_prony, [common, fam], "fit an exponential model to alpha_n")
    p.add_argument("--kmax", type=int, default=4)
    p.add_argument("--start", type=int, default=None)
    p.add_argument("--count", type=int, default=81, help="number of coefficients when using --family")

    p = add("pade-poles", cmd_pade_poles, [common, fam], "poles of a diagonal Padé approximant")
    p.add_argument("--series", help="series file (n,re,im CSV or JSON); default: dinv of --family")
    p.add_argument("--m", type=int, default=12)
    p.add_argument("--n", type=int, default=200)

    p = add("gset", cmd_gset, [common], "generated set of a point set")
    p.add_argument("--points", required=True)
    p.add_argument("--rmax", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("--layer", default="all", help="all, g3 or a layer index k")

    p = add("mingen", cmd_mingen, [common], "minimal generators of a generated set")
    p.add_argument("--points", required=True)
    p.add_argument("--rmax", type=float)
    p.add_argument("--eps", type=float)

    p = add("invert", cmd_invert, [common, fam], "weight -> moments -> Verblunsky coefficients")
    p.add_argument("--weight", help="builtin:single-moment | builtin:rogers-szego | builtin:constant")
    p.add_argument("--n", type=int, default=40)
    p.add_argument("--nodes", type=int, default=None, help="quadrature nodes (power of two >= 8n)")
    p.add_argument("--normalize", action="store_true")

    p = add("crosscheck", cmd_crosscheck, [common, fam], "integral formulas for alpha_n")
    p.add_argument("--formula", choices=("freud", "2414"), default="freud")
    p.add_argument("--n", type=int, default=5)
    p.add_argument("--weight")
    p.add_argument("--nodes", type=int, default=None)
    p.add_argument("--degree", type=int, default=200)

    p = add("verify", cmd_verify, [common, fam], "run verification scenarios")
    p.add_argument("scenario", choices=harness.SCENARIOS + ("all",))
    p.add_argument("--json", help="also write the report JSON here")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--with-runtime", action="store_true", help="include runtime_ms in the output")

    p = add("report", cmd_report, [common], "tabulate a saved report or run the full suite")
    p.add_argument("--input", help="report JSON written by verify --json")
    p.add_argument("--jobs", type=int, default=1)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help, or a usage error already reported
        return exc.code if isinstance(exc.code, int) else 1
    try:
        code = args.func(args)
    except SzegoLabError as exc:
        sys.stderr.write(json.dumps(exc.to_dict()) + "\n")
        return 2
    except (UsageError, ValueError, KeyError, json.JSONDecodeError) as exc:
        sys.stderr.write("szego-lab: error: %s\n" % exc)
        return 1
    return code or 0


if __name__ == "__main__":
    sys.exit(main())
