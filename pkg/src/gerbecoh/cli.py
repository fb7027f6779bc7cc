"""Command line front end: read JSON inputs, run one computation, print a JSON report.

Exit codes: 0 success, 1 inputs incompatible with the command, 2 unreadable
or invalid input, 3 an internal identity failed.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from . import band as bandmod
from . import tn
from .gmod import (FinGroup, GammaModule, GroupAxiomError, ModuleAxiomError, OracleOutOfRange, Subgroup,
                   cohomology_brute, tate_h0, tate_hm1)
from .shapiro import (CochainError, SectionError, build_section, random_two_cocycle, sh4_cochain,
                      shapiro_check)
from .sites import MalformedSiteError, PlaceSystem, Tower, validate_site, validate_tower

EXIT_OK, EXIT_SEMANTIC, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2, 3

SEMANTIC_ERRORS = (bandmod.LevelError, bandmod.InvalidSiteError, bandmod.InvariantViolation, bandmod.LiftError,
                   tn.LocalGroupMismatch, tn.IncoherentCollection, tn.NotRealizedAtLevel,
                   tn.InadmissibleSection, OracleOutOfRange, CochainError)


class InputError(ValueError):
    """Missing flag, unreadable file or malformed JSON."""


INPUT_ERRORS = (InputError, MalformedSiteError, tn.IsogenyError, GroupAxiomError, ModuleAxiomError, SectionError)


class Run:
    """Collects inputs, results and checks for one invocation."""

    def __init__(self, args: argparse.Namespace, argv: Sequence[str]):
        self.args = args
        self.argv = list(argv)
        self.inputs: dict[str, str] = {}
        self.checks: dict[str, bool] = {}
        self.rng = np.random.default_rng(args.seed)

    def load(self, flag: str) -> object:
        path = getattr(self.args, flag.replace("-", "_"), None)
        if path is None:
            raise InputError(f"--{flag} is required for this command")
        try:
            raw = Path(path).read_bytes()
        except OSError as exc:
            raise InputError(f"--{flag}: cannot read {path}: {exc.strerror}") from None
        self.inputs[flag] = hashlib.sha256(raw).hexdigest()
        try:
            return json.loads(raw)
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise InputError(f"--{flag}: invalid JSON: {exc}") from None

    def check(self, name: str, ok: bool):
        self.checks[name] = bool(ok)

    # typed loaders

    def site(self) -> PlaceSystem:
        data = self.load("site")
        if not isinstance(data, Mapping):
            raise MalformedSiteError("site: expected a JSON object")
        return PlaceSystem.from_json(data)

    def tower(self) -> Tower:
        data = self.load("tower")
        if not isinstance(data, Mapping):
            raise MalformedSiteError("tower: expected a JSON object")
        return Tower.from_json(data)

    def group(self) -> FinGroup:
        data = self.load("group")
        if not isinstance(data, Mapping):
            raise GroupAxiomError("group: expected a JSON object")
        return FinGroup.from_json(data)

    def module(self, group: FinGroup, sub: Subgroup | None = None) -> GammaModule:
        data = self.load("coeff")
        if not isinstance(data, Mapping):
            raise ModuleAxiomError("coeff: expected a JSON object")
        if sub is None:
            return GammaModule.from_json(data, group)
        action = data.get("action")
        if isinstance(action, list) and len(action) == group.order and group.order != sub.order:
            return GammaModule.from_json(data, group).restrict(sub)
        return GammaModule.from_json(data, sub.as_group)

    def isogeny(self, group: FinGroup) -> tn.IsogenyDatum:
        data = self.load("isogeny")
        if not isinstance(data, Mapping):
            raise tn.IsogenyError("isogeny: expected a JSON object")
        return tn.IsogenyDatum.from_json(data, group)

    def collection(self) -> dict:
        data = self.load("collection")
        if not isinstance(data, Mapping):
            raise InputError("collection: expected an object from place labels to vectors")
        return {str(k): v for k, v in data.items()}

    def level(self, flag: str = "level") -> int:
        n = getattr(self.args, flag.replace("-", "_"))
        if n is None:
            raise InputError(f"--{flag} is required for this command")
        return n


def _class_vector(run: Run, gg: tn.GlobalGroup, flag: str = "class") -> list[int]:
    """A global class file: ``{"coordinates": [...]}`` or ``{place label: vector}``."""
    data = run.load(flag)
    if not isinstance(data, Mapping):
        raise InputError(f"{flag}: expected a JSON object")
    if "coordinates" in data:
        coords = data["coordinates"]
        if not isinstance(coords, list) or len(coords) != len(gg.group.invariant_factors):
            raise InputError(f"{flag}: need {len(gg.group.invariant_factors)} coordinates")
        return gg.representative([int(c) for c in coords])
    f = gg.functions
    r = f.rank
    x = [0] * f.size
    for label, vec in data.items():
        try:
            w = gg.site.place_index(str(label))
        except MalformedSiteError:
            raise InputError(f"{flag}: unknown place {label!r}") from None
        if not isinstance(vec, list) or len(vec) != r:
            raise InputError(f"{flag}: value at {label} must have length {r}")
        x[w * r:(w + 1) * r] = [int(c) for c in vec]
    if not gg.contains(x):
        raise tn.LocalGroupMismatch(f"{flag}: not a representative of the global group")
    return x


def _json_subgroup(group: FinGroup, text: str | None, flag: str) -> Subgroup:
    if text is None:
        raise InputError(f"--{flag} is required for this command")
    try:
        elems = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"--{flag}: invalid JSON list: {exc}") from None
    if not isinstance(elems, list) or not all(isinstance(e, int) and 0 <= e < group.order for e in elems):
        raise InputError(f"--{flag}: expected a list of group elements")
    return Subgroup(group, tuple(sorted(set(elems))))


def _factors(g) -> list[int]:
    return list(g.invariant_factors)


# site ----------------------------------------------------------------------


def cmd_site_check(run: Run) -> dict:
    if run.args.tower is not None:
        return {"tower": validate_tower(run.tower()).to_json()}
    site = run.site()
    return {"site": validate_site(site).to_json(), "group_order": site.group.order,
            "places": len(site.labels), "rational_places": len(site.rational_labels)}


# band ----------------------------------------------------------------------


def _band_generators(b: bandmod.BandModule) -> list[np.ndarray]:
    return [b.from_module_coordinates(y) for y in b.abstract.generators()]


def cmd_band_build(run: Run) -> dict:
    b = bandmod.build_band(run.site(), run.level())
    gens = _band_generators(b)
    run.check("generators_in_band", all(b.contains(f) for f in gens))
    return {"level": b.level, "invariant_factors": _factors(b.abstract), "order": b.abstract.order,
            "generators": [[int(x) for x in f] for f in gens]}


def cmd_band_psi(run: Run) -> dict:
    site = run.site()
    b = bandmod.build_band(site, run.level())
    a = run.module(site.group)
    rep = bandmod.psi_check(b, a)
    run.check("psi_bijective", rep.bijective)
    run.check("psi_equivariant", rep.equivariant)
    return {"level": b.level, "psi": rep.to_json()}


def cmd_band_localize(run: Run) -> dict:
    site = run.site()
    b = bandmod.build_band(site, run.level())
    if run.args.place is None:
        raise InputError("--place is required for this command")
    v = site.rational_index(run.args.place)
    if run.args.coeff is None:
        locs = [bandmod.localize_element(b, f, v) for f in _band_generators(b)]
        return {"place": run.args.place, "kind": "band", "localizations":
                [{str(t): x for t, x in sorted(loc.items())} for loc in locs]}
    a = run.module(site.group)
    homs = bandmod.hom_generators(b, a)
    run.check("hom_generators_invariant", all(bandmod.in_hom(b, a, h) for h in homs))
    locs = [bandmod.band_localize(b, h, v) for h in homs]
    return {"place": run.args.place, "kind": "hom", "localizations":
            [{str(t): x for t, x in sorted(loc.items())} for loc in locs]}


def _band_value(run: Run, b: bandmod.BandModule, kind: str) -> np.ndarray:
    """A value from ``--class``: ``{"values": [...]}`` in f-coordinates, ``{rational label: [per element]}``
    for φ, or ``{place label: value}`` for ξ."""
    data = run.load("class")
    if not isinstance(data, Mapping):
        raise InputError("class: expected a JSON object")
    site, n = b.site, b.level
    try:
        if kind == "f":
            f = np.array([int(x) for x in data["values"]], dtype=np.int64)
            if f.shape != (b.size,):
                raise InputError(f"class: need {b.size} values")
            return f % n
        if kind == "phi":
            phi = np.zeros((site.s_count, b.group.order), dtype=np.int64)
            for label, row in data.items():
                if len(row) != b.group.order:
                    raise InputError(f"class: row at {label} needs {b.group.order} values")
                phi[site.rational_index(str(label))] = [int(x) for x in row]
            return phi % n
        xi = np.zeros(site.place_count, dtype=np.int64)
        for label, val in data.items():
            val = val[0] if isinstance(val, list) and len(val) == 1 else val
            xi[site.place_index(str(label))] = int(val)
        return xi % n
    except (KeyError, TypeError, ValueError, MalformedSiteError) as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"class: malformed {kind} value ({exc})") from None


def cmd_band_transition(run: Run) -> dict:
    t = run.tower()
    n, m = run.level(), run.level("to-level")
    lo = bandmod.build_band(t.lower, n)
    up = bandmod.build_band(t.upper, m)
    kind = run.args.kind
    if run.args.class_ is not None:
        value = _band_value(run, lo, kind)
        if kind == "f":
            if not lo.contains(value):
                raise bandmod.InvariantViolation("class: not an element of the band module")
            fk = bandmod.transition_f(t, value, n, m)
            run.check("image_in_upper_band", up.contains(fk))
            run.check("f_phi_square_commutes", np.array_equal(
                bandmod.phi_from_f(up, fk, check=False) % m,
                bandmod.transition_phi(t, bandmod.phi_from_f(lo, value), n, m, check=False) % m))
            image = fk
        elif kind == "phi":
            pk = bandmod.transition_phi(t, value, n, m)
            xk = bandmod.transition_xi(t, bandmod.seq_project(lo, value), n, m, check=False)
            run.check("phi_xi_square_commutes", np.array_equal(bandmod.seq_project(up, pk) % m, xk % m))
            image = pk
        else:
            if int(value.sum()) % n:
                raise bandmod.InvariantViolation("class: ξ must sum to zero")
            image = bandmod.transition_xi(t, value, n, m)
        return {"kind": kind, "from_level": n, "to_level": m, "images": [np.asarray(image).tolist()]}
    images = []
    lands = phi_square = xi_square = True
    for f in _band_generators(lo):
        fk = bandmod.transition_f(t, f, n, m)
        phi = bandmod.phi_from_f(lo, f)
        pk = bandmod.transition_phi(t, phi, n, m, check=False)
        xk = bandmod.transition_xi(t, bandmod.seq_project(lo, phi), n, m, check=False)
        lands = lands and up.contains(fk)
        phi_square = phi_square and np.array_equal(bandmod.phi_from_f(up, fk, check=False) % m, pk % m)
        xi_square = xi_square and np.array_equal(bandmod.seq_project(up, pk) % m, xk % m)
        images.append({"f": fk, "phi": pk, "xi": xk}[kind])
    run.check("image_in_upper_band", lands)
    run.check("f_phi_square_commutes", phi_square)
    run.check("phi_xi_square_commutes", xi_square)
    return {"kind": kind, "from_level": n, "to_level": m,
            "images": [np.asarray(x).tolist() for x in images]}


# cohomology ------------------------------------------------------------------------


def cmd_tate(run: Run) -> dict:
    g = run.group()
    m = run.module(g)
    hm1, h0 = tate_hm1(m), tate_h0(m)
    out = {"tate_minus_one": _factors(hm1), "tate_zero": _factors(h0)}
    if g.is_cyclic() and m.is_finite and g.order <= run.args.oracle_bound:
        run.check("degree_1_matches_oracle", _factors(cohomology_brute(m, 1, run.args.oracle_bound)) == _factors(hm1))
        run.check("degree_2_matches_oracle", _factors(cohomology_brute(m, 2, run.args.oracle_bound)) == _factors(h0))
    return out


def cmd_oracle(run: Run) -> dict:
    g = run.group()
    m = run.module(g)
    k = run.args.degree
    if k is None or k < 0:
        raise InputError("--degree must be a non-negative integer")
    h = cohomology_brute(m, k, run.args.oracle_bound)
    return {"degree": k, "invariant_factors": _factors(h), "order": h.order}


# tn -------------------------------------------------------------------------------


def _tn_inputs(run: Run) -> tuple[PlaceSystem, tn.IsogenyDatum]:
    site = run.site()
    return site, run.isogeny(site.group)


def cmd_tn_global(run: Run) -> dict:
    site, d = _tn_inputs(run)
    gg = tn.global_group(d, site)
    out = {"global": gg.to_json(), "reductive": d.is_reductive}
    if gg.norm_check is not None:
        run.check("norm_kernel_equals_torsion", gg.norm_check.ok)
    if d.is_reductive:
        seq = tn.reductive_sequence(d, site, run.rng)
        run.check("sequence_first_composite_zero", seq.first_composite_zero)
        run.check("sequence_second_composite_zero", seq.second_composite_zero)
        out["sequence"] = seq.to_json()
    return out


def cmd_tn_local(run: Run) -> dict:
    site, d = _tn_inputs(run)
    places = range(site.s_count) if run.args.place is None else [site.rational_index(run.args.place)]
    out = {}
    for v in places:
        gv = site.stabilizer(site.dot(v))
        out[site.rational_labels[v]] = {"decomposition_group": list(gv.elements),
                                        "invariant_factors": _factors(tn.local_group(d, gv))}
    return {"local": out, "target_invariant_factors": _factors(tn.global_target(d))}


def cmd_tn_localize(run: Run) -> dict:
    site, d = _tn_inputs(run)
    gg = tn.global_group(d, site, check=False)
    x = _class_vector(run, gg)
    if run.args.place is not None:
        locs = {run.args.place: tn.localize(gg, x, site.rational_index(run.args.place), run.rng)}
    else:
        locs = tn.localize_all(gg, x, run.rng)
        run.check("localizations_sum_to_zero", tn.coherence(d, site, locs).coherent)
    return {"class": gg.element(x).to_json(), "localizations": {k: v.to_json() for k, v in sorted(locs.items())}}


def cmd_tn_coherent(run: Run) -> dict:
    site, d = _tn_inputs(run)
    return tn.coherence(d, site, run.collection()).to_json()


def cmd_tn_globalize(run: Run) -> dict:
    site, d = _tn_inputs(run)
    coll = run.collection()
    gg = tn.global_group(d, site, check=False)
    cls = tn.globalize(d, site, coll, gg)
    wanted = tn._collection_vectors(d, site, coll)
    round_trip = True
    for v in range(site.s_count):
        got = tn.localize(gg, list(cls.representative), v, run.rng)
        grp = tn.local_group(d, site.stabilizer(site.dot(v)))
        round_trip = round_trip and grp.equal(list(got.representative), wanted[v])
    run.check("localize_round_trip", round_trip)
    return {"class": cls.to_json()}


def cmd_tn_shriek(run: Run) -> dict:
    t = run.tower()
    d = run.isogeny(t.lower.group)
    gg = tn.global_group(d, t.lower, check=False)
    x = _class_vector(run, gg)
    up = tn.upper_group(t, gg)
    first = tn.shriek(t, gg, x, tn.default_section(t), upper=up)
    second = tn.shriek(t, gg, x, tn.default_section(t, run.rng), upper=up, check=False)
    run.check("independent_of_section", first.coordinates == second.coordinates)
    agree = True
    for v in range(t.lower.s_count):
        a = tn.localize(gg, x, v, run.rng)
        b = tn.localize(up, list(first.representative), t.lower_in_upper[v], run.rng)
        grp = tn.local_group(d, t.lower.stabilizer(t.lower.dot(v)))
        agree = agree and grp.equal(list(a.representative), list(b.representative))
    run.check("localizations_agree", agree)
    return {"upper_global": up.to_json(), "class": first.to_json()}


# shapiro -------------------------------------------------------------------------


def _shapiro_inputs(run: Run):
    g = run.group()
    sub = _json_subgroup(g, run.args.subgroup, "subgroup")
    base = run.module(g, sub)
    normal = None
    if run.args.normal is not None:
        normal = list(_json_subgroup(g, run.args.normal, "normal").elements)
    return g, sub, base, normal


def cmd_shapiro_check(run: Run) -> dict:
    g, sub, base, normal = _shapiro_inputs(run)
    sec = build_section(g, sub, normal, run.rng)
    run.check("section_identities", not sec.check())
    rep = shapiro_check(sec, base, run.rng, bound=run.args.oracle_bound)
    run.check("chain_map", rep.chain_map)
    run.check("restriction_after_shapiro_is_identity", rep.section_identity)
    run.check("image_is_equivariant", rep.equivariant)
    run.check("bijective_on_cohomology", rep.bijective)
    return {"section": sec.to_json(), "shapiro": rep.to_json()}


def cmd_shapiro_sh4(run: Run) -> dict:
    g, sub, base, normal = _shapiro_inputs(run)
    sec = build_section(g, sub, normal)
    sec_bar = build_section(g, sub, normal, run.rng)
    z = random_two_cocycle(base, sub, g, run.rng, run.args.oracle_bound)
    res = sh4_cochain(z, sec, sec_bar, base, run.args.oracle_bound)
    run.check("coboundary_equals_difference", res.verified)
    return {"sections": [sec.to_json(), sec_bar.to_json()], "sh4": res.to_json(g)}


COMMANDS: dict[tuple[str, str | None], Callable[[Run], dict]] = {
    ("site", "check"): cmd_site_check,
    ("band", "build"): cmd_band_build,
    ("band", "psi"): cmd_band_psi,
    ("band", "localize"): cmd_band_localize,
    ("band", "transition"): cmd_band_transition,
    ("tate", None): cmd_tate,
    ("oracle", None): cmd_oracle,
    ("tn", "global"): cmd_tn_global,
    ("tn", "local"): cmd_tn_local,
    ("tn", "localize"): cmd_tn_localize,
    ("tn", "coherent"): cmd_tn_coherent,
    ("tn", "globalize"): cmd_tn_globalize,
    ("tn", "shriek"): cmd_tn_shriek,
    ("shapiro", "check"): cmd_shapiro_check,
    ("shapiro", "sh4"): cmd_shapiro_sh4,
}


def _common(p: argparse.ArgumentParser):
    p.add_argument("--site")
    p.add_argument("--tower")
    p.add_argument("--isogeny")
    p.add_argument("--collection")
    p.add_argument("--class", dest="class_")
    p.add_argument("--group")
    p.add_argument("--coeff")
    p.add_argument("--subgroup", help="JSON list of group elements")
    p.add_argument("--normal", help="JSON list: build the section through this normal subgroup")
    p.add_argument("--place", help="rational place label")
    p.add_argument("--level", type=int)
    p.add_argument("--to-level", type=int)
    p.add_argument("--kind", choices=["f", "phi", "xi"], default="f")
    p.add_argument("--degree", type=int)
    p.add_argument("--oracle-bound", type=int, default=12)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--timing", action="store_true", help="include wall-clock time (breaks byte-identity)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gerbecoh", description=__doc__.splitlines()[0])
    top = parser.add_subparsers(dest="command", required=True)
    groups: dict[str, list[str]] = {}
    for cmd, sub in COMMANDS:
        groups.setdefault(cmd, [])
        if sub is not None:
            groups[cmd].append(sub)
    for cmd, subs in groups.items():
        p = top.add_parser(cmd)
        if subs:
            inner = p.add_subparsers(dest="action", required=True)
            for s in subs:
                _common(inner.add_parser(s))
        else:
            _common(p)
    return parser


def _emit(report: dict, out: str | None):
    text = json.dumps(report, sort_keys=True, indent=2, default=_default) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    setattr(args, "class", args.class_)
    run = Run(args, argv)
    key = (args.command, getattr(args, "action", None))
    start = time.perf_counter()
    report: dict = {"command": argv}
    code = EXIT_OK
    try:
        report["result"] = COMMANDS[key](run)
    except INPUT_ERRORS as exc:
        code = EXIT_INPUT
        report["error"] = {"kind": "input", "type": type(exc).__name__, "message": str(exc)}
    except SEMANTIC_ERRORS as exc:
        code = EXIT_SEMANTIC
        report["error"] = {"kind": "semantic", "type": type(exc).__name__, "message": str(exc)}
        if isinstance(exc, tn.IncoherentCollection):
            report["error"]["obstruction"] = list(exc.obstruction)
    except Exception as exc:  # anything else is a bug
        code = EXIT_INTERNAL
        report["error"] = {"kind": "internal", "type": type(exc).__name__, "message": str(exc)}
    report["inputs"] = dict(sorted(run.inputs.items()))
    report["checks"] = {k: "pass" if v else "fail" for k, v in sorted(run.checks.items())}
    if code == EXIT_OK and not all(run.checks.values()):
        code = EXIT_INTERNAL
    report["status"] = {EXIT_OK: "ok", EXIT_SEMANTIC: "incompatible", EXIT_INPUT: "bad input",
                        EXIT_INTERNAL: "internal failure"}[code]
    if args.timing:
        report["seconds"] = round(time.perf_counter() - start, 6)
    if code != EXIT_OK:
        print(f"gerbecoh: {report.get('error', {}).get('message', 'a check failed')}", file=sys.stderr)
    try:
        _emit(report, args.out)
    except OSError as exc:
        print(f"gerbecoh: cannot write {args.out}: {exc.strerror}", file=sys.stderr)
        return EXIT_INPUT
    return code


if __name__ == "__main__":
    sys.exit(main())
