"""Command-line entry point.

    omx classify (--config PATH | --preset NAME [--set KEY=VALUE ...]) [--out PATH]
    omx ring {resonances,sweep,profile} [ring options] [--out PATH]
    omx cool {ring,single,compare,ringdown} [cooling options] [--out PATH]

``ring`` and ``cool`` also take ``--config PATH`` pointing at a TOML file with
a ``[ring]`` or ``[cool]`` table whose keys mirror the long option names
(dashes become underscores).  Explicit options override the file.

Reports are JSON, tables are CSV.  Exit status is 0 on success and 1 on any
error; physics warnings are recorded in the output and never change it.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from . import cooling as cool
from . import io
from . import ring_cavity as rc
from .classifier import classify
from .constants import C_LIGHT
from .errors import OmxError, ParseError
from .system_model import MechanicalOscillator, OPTIONAL_PRESET_PARAMS, PRESET_IDS, PRESET_PARAMS, PresetId

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


def _threads() -> int:
    raw = os.environ.get("OMX_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        n = os.cpu_count() or 1
    return max(1, n)


def _write(text: str, out: str | None):
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _warning_texts(caught) -> list:
    seen, out = set(), []
    for w in caught:
        msg = f"{w.category.__name__}: {w.message}"
        if msg not in seen:
            seen.add(msg)
            out.append(msg)
    return out


# --- classify ----------------------------------------------------------------

def _parse_sets(pairs) -> dict:
    out = {}
    for item in pairs or ():
        key, sep, val = item.partition("=")
        if not sep:
            raise ParseError(item, "expected KEY=VALUE")
        try:
            out[key.strip()] = float(val)
        except ValueError as exc:
            raise ParseError(key.strip(), f"value {val!r} is not a number") from exc
    return out


def cmd_classify(args) -> int:
    if (args.config is None) == (args.preset is None):
        raise ParseError("--config|--preset", "give exactly one of --config or --preset")
    if args.config is not None:
        with open(args.config, "r", encoding="utf-8") as fh:
            text = fh.read()
        cfg = io.parse_config_text(text)
        sha = cfg.source_sha256
    else:
        params = _parse_sets(args.set)
        text = "[preset]\nid = %s\n[preset.params]\n" % _toml_str(args.preset)
        text += "".join(f"{k} = {v!r}\n" for k, v in params.items())
        cfg = io.parse_config_text(text)
        sha = None
    cfg_dict = io.config_to_dict(cfg)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        model = io.to_model(cfg)
        report = classify(model)
    doc = io.classification_document(report, model, cfg_dict, sha, _warning_texts(caught))
    _write(io.dump_document(doc), args.out)
    return 0


def _toml_str(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


# --- shared option handling --------------------------------------------------

def _merge_file(args, section: str, defaults: dict):
    """Fill options left at ``None`` from a TOML ``[section]`` table, then defaults."""
    file_vals = {}
    if getattr(args, "config", None):
        with open(args.config, "rb") as fh:
            try:
                doc = tomllib.load(fh)
            except tomllib.TOMLDecodeError as exc:
                raise ParseError("<document>", str(exc)) from exc
        if section not in doc or not isinstance(doc[section], dict):
            raise ParseError(section, f"config file has no [{section}] table")
        file_vals = doc[section]
        for k in file_vals:
            if k not in defaults:
                raise ParseError(f"{section}.{k}", "unknown option")
    for k, d in defaults.items():
        if getattr(args, k, None) is None:
            setattr(args, k, file_vals.get(k, d))


RING_DEFAULTS = {
    "r": 0.3,
    "t0": 0.01,
    "length": 1.0,
    "fsr_index": None,
    "wavelength": 1064e-9,
    "x": 0.0,
    "points": 4001,
}


def _ring_from_args(args) -> rc.RingCavityParams:
    if args.fsr_index is None:
        return rc.RingCavityParams.for_wavelength(args.r, args.t0, args.length, args.wavelength)
    return rc.RingCavityParams.lossless_membrane(args.r, args.t0, args.length, int(args.fsr_index))


def _ring_inputs(p: rc.RingCavityParams) -> dict:
    return {"r": p.r, "t": p.t, "t0": p.t0, "r0": p.r0, "length": p.L, "fsr_index": p.fsr_index}


def _chunked(fn, grid, n_threads):
    chunks = np.array_split(grid, max(1, min(n_threads, len(grid))))
    if n_threads == 1 or len(chunks) == 1:
        return np.concatenate([fn(c) for c in chunks])
    with ThreadPoolExecutor(max_workers=n_threads) as ex:
        return np.concatenate(list(ex.map(fn, chunks)))


def cmd_ring(args) -> int:
    _merge_file(args, "ring", RING_DEFAULTS)
    p = _ring_from_args(args)
    inputs = _ring_inputs(p)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        if args.sub == "resonances":
            res = rc.solve_resonances(p)
            doc = {
                "header": io.header("ring resonances", inputs),
                "k_minus": io.quantity(res.k_minus, "1/m"),
                "k_plus": io.quantity(res.k_plus, "1/m"),
                "omega_minus": io.quantity(res.omega_minus, "rad/s"),
                "omega_plus": io.quantity(res.omega_plus, "rad/s"),
                "omega_s": io.quantity(res.omega_s, "rad/s"),
                "fsr": io.quantity(res.fsr, "rad/s"),
                "linewidth": io.quantity(rc.linewidth(p), "rad/s"),
                "fsr_index": res.fsr_index,
            }
            doc["warnings"] = _warning_texts(caught)
            _write(io.dump_document(doc), args.out)
            return 0
        if args.sub == "sweep":
            grid = np.linspace(-math.pi, math.pi, int(args.points))
            vals = _chunked(lambda d: rc.response_sweep(p, d, args.x), grid, _threads())
            inputs["x"] = args.x
            table = io.SweepTable(("delta", "abs_e1_over_a1", "abs_e2_over_a1"),
                                  np.column_stack([grid, vals]),
                                  io.table_provenance("ring sweep", inputs))
        else:
            z = np.linspace(0.0, p.L, int(args.points), endpoint=False)
            pm = rc.mode_profile("minus", args.x, p, z)
            pp = rc.mode_profile("plus", args.x, p, z)
            inputs["x"] = args.x
            table = io.SweepTable(("z", "abs_P_minus", "abs_P_plus", "arg_P_minus", "arg_P_plus"),
                                  np.column_stack([z, np.abs(pm), np.abs(pp), np.angle(pm), np.angle(pp)]),
                                  io.table_provenance("ring profile", inputs))
    table = io.SweepTable(table.columns, table.data, {**table.provenance, **{
        f"warning{i + 1}": w for i, w in enumerate(_warning_texts(caught))}})
    _write(table.to_csv(), args.out)
    return 0


# --- cool --------------------------------------------------------------------

COOL_DEFAULTS = {
    "omega_m": 2 * math.pi * 2.5e6,
    "mass": 1e-10,
    "gamma_m": 2 * math.pi * 1.0,
    "temperature": 0.0,
    "t0": 0.01,
    "length": 0.4,
    "r": None,  # tuned to 2 omega_s = Omega_m when omitted
    "wavelength": 1064e-9,
    "fsr_index": None,
    "power": 1e-3,
    "a_in": None,
    "l_sc": None,  # defaults to the ring length
    "x0": None,
    "duration": None,
    "pump": "minus",
    "quadrature": False,
    "trajectory": None,
    "samples": 2000,
}


def _scenario_from_args(args) -> tuple:
    L = args.length
    N = int(args.fsr_index) if args.fsr_index is not None else max(1, int(round(L / args.wavelength)))
    if args.r is None:
        ring = cool.tuned_ring(args.omega_m, args.t0, L, N)
    else:
        ring = rc.RingCavityParams.lossless_membrane(args.r, args.t0, L, N)
    mech = MechanicalOscillator(args.mass, args.omega_m, args.gamma_m, args.temperature)
    res = rc.solve_resonances(ring)
    k_p = res.k_minus if args.pump == "minus" else res.k_plus
    omega_p = C_LIGHT * k_p
    if args.a_in is not None:
        A = float(args.a_in)
    else:
        A = math.sqrt(args.power / (io_hbar() * omega_p))
    s = cool.CoolingScenario(ring, mech, A, k_p, args.pump)
    inputs = {**_ring_inputs(ring), "omega_m": args.omega_m, "mass": args.mass,
              "gamma_m": args.gamma_m, "temperature": args.temperature,
              "pump": args.pump, "a_in": A, "k_p": k_p}
    return s, inputs


def io_hbar() -> float:
    from .constants import HBAR
    return HBAR


def _scenario_block(s: cool.CoolingScenario) -> dict:
    out = {
        "gamma": io.quantity(s.gamma, "rad/s"),
        "omega_s": io.quantity(s.omega_s, "rad/s"),
        "input_power": io.quantity(s.input_power, "W"),
        "tuned": s.tuned,
        "tuning_error": s.tuning_error,
        "resolved_sideband": s.resolved_sideband,
    }
    if s.pump == "plus":
        out["note"] = "pump on the upper mode: mirrored (heating) configuration, extension beyond the cooling derivation"
    return out


def cmd_cool(args) -> int:
    _merge_file(args, "cool", COOL_DEFAULTS)
    s, inputs = _scenario_from_args(args)
    title = f"cool {args.sub}"
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        if args.sub == "ring":
            occ = cool.occupation_number(s)
            Cm, Cp = cool.static_amplitudes(s)
            eff = cool.effective_parameters(s)
            doc = {
                "header": io.header(title, inputs),
                "scenario": _scenario_block(s),
                "static_amplitudes": {"C_minus": io.quantity(Cm, "sqrt(photons)"),
                                      "C_plus": io.quantity(Cp, "sqrt(photons)")},
                "gamma_opt": io.quantity(occ.gamma_opt, "rad/s"),
                "Omega_opt_sq": io.quantity(occ.Omega_opt_sq, "rad^2/s^2"),
                "gamma_eff": io.quantity(occ.gamma_eff, "rad/s"),
                "Omega_eff": io.quantity(eff["Omega_eff"], "rad/s"),
                "G_eff": io.quantity(eff["G_eff"], "N"),
                "x_zpf": io.quantity(eff["x_zpf"], "m"),
                "n_mean": io.quantity(occ.n_mean, "1"),
                "n_limit": io.quantity(occ.n_limit, "1"),
                "n_th": io.quantity(occ.n_th, "1"),
                "n_ba": io.quantity(occ.n_ba, "1"),
                "note": "n_mean is the resolved-sideband closed form without the mechanical "
                        "zero-point term; n_limit is the thermal/back-action weighted mean",
            }
            if args.quadrature:
                doc["n_quadrature"] = io.quantity(cool.occupation_quadrature(s), "1")
        elif args.sub == "single":
            L_sc = args.l_sc if args.l_sc is not None else s.ring.L
            sc = cool.single_cavity_damping(L_sc, s.omega_p, s.gamma, s.mech, s.A_in)
            inputs["l_sc"] = L_sc
            doc = {
                "header": io.header(title, inputs),
                "gamma": io.quantity(s.gamma, "rad/s"),
                "g_sc": io.quantity(sc.g_sc, "rad/s/m"),
                "A_sc": io.quantity(sc.A_sc, "sqrt(photons)"),
                "gamma_opt": io.quantity(sc.gamma_opt, "rad/s"),
                "gamma_opt_resolved_sideband": io.quantity(sc.gamma_opt_approx, "rad/s"),
            }
        elif args.sub == "compare":
            L_sc = args.l_sc if args.l_sc is not None else s.ring.L
            inputs["l_sc"] = L_sc
            rep = cool.damping_ratio(s, L_sc)
            doc = {
                "header": io.header(title, inputs),
                "scenario": _scenario_block(s),
                "R": io.quantity(rep.R, "1"),
                "forms": {
                    "omega_gamma": rep.R_omega_gamma,
                    "arcsin": rep.R_arcsin,
                    "lengths": rep.R_lengths,
                    "rates": rep.R_rates,
                },
                "max_rel_spread": rep.max_rel_spread,
                "threshold_Omega": io.quantity(rep.threshold_Omega, "rad/s"),
                "R_at_threshold": rep.R_at_threshold,
                "unity_Omega": io.quantity(rep.unity_Omega, "rad/s"),
                "ring_outperforms_single": rep.above_unity,
                "reference_value": rep.reference_value,
                "caveat": rep.caveat,
            }
        else:
            x0 = args.x0 if args.x0 is not None else 1e-3 / s.k_p
            inputs["x0"] = x0
            rd = cool.ringdown_simulate(s, x0, args.duration)
            doc = {
                "header": io.header(title, inputs),
                "scenario": _scenario_block(s),
                "gamma_eff_fit": io.quantity(rd.gamma_eff_fit, "rad/s"),
                "gamma_eff_closed_form": io.quantity(rd.gamma_eff_closed, "rad/s"),
                "relative_difference": rd.gamma_eff_fit / rd.gamma_eff_closed - 1,
                "fit_start": io.quantity(rd.fit_start, "s"),
            }
            if args.trajectory:
                step = max(1, len(rd.t) // int(args.samples))
                tbl = io.SweepTable(("t", "x", "envelope"),
                                    np.column_stack([rd.t[::step], rd.x[::step], rd.envelope[::step]]),
                                    io.table_provenance(title, inputs))
                _write(tbl.to_csv(), args.trajectory)
    doc["warnings"] = _warning_texts(caught)
    _write(io.dump_document(doc), args.out)
    return 0


# --- parser ------------------------------------------------------------------

def _ring_options(p):
    p.add_argument("--config", help="TOML file with a [ring] table")
    p.add_argument("--r", type=float, help="membrane amplitude reflectivity (default 0.3)")
    p.add_argument("--t0", type=float, help="front-mirror amplitude transmittance (default 0.01)")
    p.add_argument("--length", type=float, help="cavity length in m (default 1.0)")
    p.add_argument("--fsr-index", dest="fsr_index", type=int, help="FSR branch N (default: nearest to --wavelength)")
    p.add_argument("--wavelength", type=float, help="vacuum wavelength used to pick N (default 1064e-9 m)")
    p.add_argument("--x", type=float, help="membrane displacement in m (default 0)")
    p.add_argument("--points", type=int, help="grid size for sweep/profile (default 4001)")
    p.add_argument("--out", help="output path (default stdout)")


def _cool_options(p):
    p.add_argument("--config", help="TOML file with a [cool] table")
    p.add_argument("--omega-m", dest="omega_m", type=float, help="mechanical frequency, rad/s")
    p.add_argument("--mass", type=float, help="effective mass, kg")
    p.add_argument("--gamma-m", dest="gamma_m", type=float, help="mechanical damping, rad/s")
    p.add_argument("--temperature", type=float, help="bath temperature, K")
    p.add_argument("--t0", type=float, help="front-mirror amplitude transmittance")
    p.add_argument("--length", type=float, help="ring length, m")
    p.add_argument("--r", type=float, help="membrane reflectivity (default: tuned so 2 omega_s = Omega_m)")
    p.add_argument("--wavelength", type=float, help="pump wavelength, m")
    p.add_argument("--fsr-index", dest="fsr_index", type=int, help="FSR branch N")
    p.add_argument("--power", type=float, help="input power, W (ignored if --a-in is given)")
    p.add_argument("--a-in", dest="a_in", type=float, help="input amplitude, sqrt(photons/s)")
    p.add_argument("--l-sc", dest="l_sc", type=float, help="single-cavity length for comparison, m")
    p.add_argument("--x0", type=float, help="initial displacement for ringdown, m")
    p.add_argument("--duration", type=float, help="ringdown duration, s (default 20 / gamma_eff)")
    p.add_argument("--pump", choices=("minus", "plus"), help="pumped mode (default minus)")
    p.add_argument("--quadrature", action="store_true", default=None,
                   help="also evaluate the occupation by numerical quadrature")
    p.add_argument("--trajectory", help="CSV path for the ringdown trajectory")
    p.add_argument("--samples", type=int, help="max rows in the trajectory table")
    p.add_argument("--out", help="output path (default stdout)")


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with status 1 like every other failure."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"omx: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="omx", description="Optomechanical coupling classification and ring-cavity cooling.")
    parser.add_argument("--version", action="version", version=f"omx {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    pc = sub.add_parser("classify", help="classify the couplings of a linear optomechanical system")
    pc.add_argument("--config", help="TOML system config ([preset] or [explicit])")
    pc.add_argument("--preset", choices=PRESET_IDS, help="named example system")
    pc.add_argument("--set", action="append", metavar="KEY=VALUE", help="preset parameter (repeatable)")
    pc.add_argument("--out", help="output path (default stdout)")
    pc.set_defaults(func=cmd_classify)

    pr = sub.add_parser("ring", help="ring-cavity optics")
    rsub = pr.add_subparsers(dest="sub", required=True, parser_class=_Parser)
    for name, text in (("resonances", "resonance pair, splitting and linewidth"),
                       ("sweep", "intracavity response versus detuning (CSV)"),
                       ("profile", "standing-wave mode profiles (CSV)")):
        sp = rsub.add_parser(name, help=text)
        _ring_options(sp)
        sp.set_defaults(func=cmd_ring)

    pk = sub.add_parser("cool", help="sideband cooling in the ring cavity")
    ksub = pk.add_subparsers(dest="sub", required=True, parser_class=_Parser)
    for name, text in (("ring", "optical damping and phonon occupation"),
                       ("single", "single-cavity optical damping at the same input"),
                       ("compare", "ring versus single-cavity damping ratio"),
                       ("ringdown", "time-domain ringdown and fitted effective damping")):
        sp = ksub.add_parser(name, help=text)
        _cool_options(sp)
        sp.set_defaults(func=cmd_cool)
    return parser


def preset_help() -> str:
    return "\n".join(f"{p}: {', '.join(PRESET_PARAMS[p] + OPTIONAL_PRESET_PARAMS[p])}" for p in PRESET_IDS)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (OmxError, ValueError, OSError) as exc:
        print(f"omx: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
