"""Finite models of a Galois extension with a finite set of places.

A :class:`PlaceSystem` records the group, the places of the big field lying
over a finite set of rational places, the permutation action, and a chosen
lift of each rational place.  Places are integers internally; labels only
matter for JSON input and output.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Sequence

from .gmod import FinGroup, GroupAxiomError, Subgroup


class MalformedSiteError(ValueError):
    """Structural violation: not an action, not a section, and so on."""


@dataclass(frozen=True)
class PlaceSystem:
    group: FinGroup
    rational_labels: tuple[str, ...]
    labels: tuple[str, ...]
    fiber: tuple[int, ...]
    action: tuple[tuple[int, ...], ...]
    section: tuple[int, ...]
    flags: Mapping[str, bool] = field(default_factory=dict)
    occurring_stabilizers: tuple[tuple[int, ...], ...] | None = None

    def __post_init__(self):
        G = self.group
        n = len(self.labels)
        k = len(self.rational_labels)
        if len(set(self.labels)) != n or len(set(self.rational_labels)) != k:
            raise MalformedSiteError("place labels must be unique")
        if len(self.fiber) != n or any(not (0 <= v < k) for v in self.fiber):
            raise MalformedSiteError("fiber map must send every place to a rational place")
        if len(self.action) != G.order:
            raise MalformedSiteError("need one permutation per group element")
        for g, perm in enumerate(self.action):
            if sorted(perm) != list(range(n)):
                raise MalformedSiteError(f"action of element {g} is not a permutation of the places")
        if any(self.action[0][w] != w for w in range(n)):
            raise MalformedSiteError("identity moves a place")
        for g in G.elements:
            for h in G.elements:
                gh = G.mul(g, h)
                for w in range(n):
                    if self.action[gh][w] != self.action[g][self.action[h][w]]:
                        raise MalformedSiteError(f"not an action at ({g}, {h}) on place {self.labels[w]}")
        for g in G.elements:
            for w in range(n):
                if self.fiber[self.action[g][w]] != self.fiber[w]:
                    raise MalformedSiteError(
                        f"projection not equivariant at (element {g}, place {self.labels[w]})")
        if len(self.section) != k:
            raise MalformedSiteError("section must have one entry per rational place")
        for v, w in enumerate(self.section):
            if not (0 <= w < n) or self.fiber[w] != v:
                raise MalformedSiteError(f"section value for {self.rational_labels[v]} does not lie over it")
        for v in range(k):
            orbit = {self.action[g][self.section[v]] for g in G.elements}
            over = {w for w in range(n) if self.fiber[w] == v}
            if orbit != over:
                raise MalformedSiteError(f"places over {self.rational_labels[v]} do not form one orbit")
        if self.occurring_stabilizers is not None:
            for h in self.occurring_stabilizers:
                try:
                    Subgroup(G, tuple(h))
                except GroupAxiomError as exc:
                    raise MalformedSiteError(f"listed stabilizer {list(h)} is not a subgroup: {exc}") from None

    # basic lookups ----------------------------------------------------------

    @property
    def s_count(self) -> int:
        return len(self.rational_labels)

    @property
    def place_count(self) -> int:
        return len(self.labels)

    def act(self, g: int, w: int) -> int:
        return self.action[g][w]

    def dot(self, v: int) -> int:
        return self.section[v]

    @cached_property
    def section_set(self) -> frozenset[int]:
        return frozenset(self.section)

    def places_over(self, v: int) -> list[int]:
        return [w for w in range(self.place_count) if self.fiber[w] == v]

    def stabilizer(self, w: int) -> Subgroup:
        if not (0 <= w < self.place_count):
            raise IndexError(f"no place with index {w}")
        return Subgroup(self.group, tuple(g for g in self.group.elements if self.action[g][w] == w))

    @cached_property
    def section_stabilizers(self) -> tuple[Subgroup, ...]:
        return tuple(self.stabilizer(w) for w in self.section)

    def transporter(self, w: int) -> int:
        """The least group element θ with ``θ · dot(fiber(w)) == w``."""
        base = self.section[self.fiber[w]]
        for g in self.group.elements:
            if self.action[g][base] == w:
                return g
        raise MalformedSiteError("place not in the orbit of its section place")

    def place_index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise MalformedSiteError(f"unknown place label {label!r}") from None

    def rational_index(self, label: str) -> int:
        try:
            return self.rational_labels.index(label)
        except ValueError:
            raise MalformedSiteError(f"unknown rational place label {label!r}") from None

    # JSON ---------------------------------------------------------------------

    @classmethod
    def from_json(cls, data: Mapping) -> "PlaceSystem":
        try:
            grp = data["group"]
            group = FinGroup.from_table(grp["table"])
            if "order" in grp and grp["order"] != group.order:
                raise MalformedSiteError("group.order does not match the table")
        except GroupAxiomError as exc:
            raise MalformedSiteError(f"group: {exc}") from None
        except (KeyError, TypeError) as exc:
            raise MalformedSiteError(f"group: missing or malformed field {exc}") from None
        try:
            places = data["places"]
            rational = tuple(str(p["label"]) for p in places)
            labels = []
            fiber = []
            for v, p in enumerate(places):
                for w in p["fiber"]:
                    labels.append(str(w))
                    fiber.append(v)
        except (KeyError, TypeError) as exc:
            raise MalformedSiteError(f"places: missing or malformed field {exc}") from None
        index = {w: i for i, w in enumerate(labels)}
        if len(index) != len(labels):
            raise MalformedSiteError("places: a place label occurs twice")
        raw_action = data.get("action")
        if not isinstance(raw_action, list) or len(raw_action) != group.order:
            raise MalformedSiteError("action: need one entry per group element")
        action = []
        for g, entry in enumerate(raw_action):
            try:
                if isinstance(entry, Mapping):
                    perm = [index[str(entry[w])] for w in labels]
                else:
                    perm = [index[str(x)] for x in entry]
            except KeyError as exc:
                raise MalformedSiteError(f"action[{g}]: unknown place {exc}") from None
            if len(perm) != len(labels):
                raise MalformedSiteError(f"action[{g}]: wrong length")
            action.append(tuple(perm))
        raw_section = data.get("section")
        if not isinstance(raw_section, Mapping):
            raise MalformedSiteError("section: expected a mapping from rational labels to place labels")
        try:
            section = tuple(index[str(raw_section[v])] for v in rational)
        except KeyError as exc:
            raise MalformedSiteError(f"section: missing or unknown entry {exc}") from None
        flags = {k: bool(v) for k, v in (data.get("flags") or {}).items()}
        stabs = data.get("stabilizer_classes")
        stabs = tuple(tuple(int(x) for x in h) for h in stabs) if stabs is not None else None
        return cls(group, rational, tuple(labels), tuple(fiber), tuple(action), section, flags, stabs)

    def to_json(self) -> dict:
        out = {
            "group": self.group.to_json(),
            "places": [{"label": v, "fiber": [self.labels[w] for w in self.places_over(i)]}
                       for i, v in enumerate(self.rational_labels)],
            "action": [[self.labels[self.action[g][w]] for w in self.place_order] for g in self.group.elements],
            "section": {v: self.labels[self.section[i]] for i, v in enumerate(self.rational_labels)},
            "flags": dict(self.flags),
        }
        if self.occurring_stabilizers is not None:
            out["stabilizer_classes"] = [list(h) for h in self.occurring_stabilizers]
        return out

    @property
    def place_order(self) -> list[int]:
        """Places in the order used by :meth:`to_json` (fiber by fiber)."""
        return [w for v in range(self.s_count) for w in self.places_over(v)]


def decomposition_group(p: PlaceSystem, w: int) -> Subgroup:
    return p.stabilizer(w)


def cyclic_subgroups(group: FinGroup) -> list[tuple[int, ...]]:
    return sorted({group.closure([g]) for g in group.elements}, key=lambda h: (len(h), h))


@dataclass(frozen=True)
class SiteReport:
    condition4: bool
    unfixed_elements: tuple[int, ...]
    condition3: bool
    missing_stabilizers: tuple[tuple[int, ...], ...]
    stabilizer_source: str
    flags: Mapping[str, bool]

    @property
    def ok(self) -> bool:
        return self.condition4 and self.condition3

    def to_json(self) -> dict:
        return {
            "condition3": "pass" if self.condition3 else "fail",
            "condition4": "pass" if self.condition4 else "fail",
            "flags": dict(sorted(self.flags.items())),
            "missing_stabilizers": [list(h) for h in self.missing_stabilizers],
            "stabilizer_source": self.stabilizer_source,
            "unfixed_elements": list(self.unfixed_elements),
        }


def unfixed_elements(p: PlaceSystem) -> list[int]:
    """Group elements fixing no section place."""
    return [g for g in p.group.elements if not any(p.act(g, w) == w for w in p.section)]


def validate_site(p: PlaceSystem) -> SiteReport:
    """Check the fixed-point condition on section places and the stabilizer condition.

    Without an explicit stabilizer list every cyclic subgroup is expected
    to occur as a stabilizer, which is what happens for unramified places.
    """
    bad = unfixed_elements(p)
    if p.occurring_stabilizers is not None:
        wanted = [tuple(sorted(h)) for h in p.occurring_stabilizers]
        source = "supplied"
    else:
        wanted = cyclic_subgroups(p.group)
        source = "cyclic subgroups"
    present = {p.stabilizer(w).elements for w in range(p.place_count)}
    missing = tuple(h for h in wanted if h not in present)
    return SiteReport(not bad, tuple(bad), not missing, missing, source, dict(p.flags))


# towers --------------------------------------------------------------------


@dataclass(frozen=True)
class Tower:
    """``lower`` at level E, ``upper`` at level K, with ``quotient: Γ_K -> Γ_E``.

    ``place_map`` sends each place of K lying over a rational place of the
    lower level to a place of E; other places map to None.
    """

    lower: PlaceSystem
    upper: PlaceSystem
    quotient: tuple[int, ...]
    place_map: tuple[int | None, ...]

    def __post_init__(self):
        if len(self.quotient) != self.upper.group.order:
            raise MalformedSiteError("quotient needs one image per element of the upper group")
        if len(self.place_map) != self.upper.place_count:
            raise MalformedSiteError("place map needs one entry per upper place")

    @cached_property
    def rational_map(self) -> tuple[int | None, ...]:
        """Upper rational index -> lower rational index (matched by label)."""
        low = {v: i for i, v in enumerate(self.lower.rational_labels)}
        return tuple(low.get(v) for v in self.upper.rational_labels)

    @cached_property
    def lower_in_upper(self) -> tuple[int, ...]:
        """Lower rational index -> upper rational index."""
        up = {v: i for i, v in enumerate(self.upper.rational_labels)}
        return tuple(up.get(v, -1) for v in self.lower.rational_labels)

    @cached_property
    def kernel(self) -> Subgroup:
        return Subgroup(self.upper.group, tuple(g for g in self.upper.group.elements if self.quotient[g] == 0))

    def relative_stabilizer(self, u: int) -> Subgroup:
        """``Γ_{K/E,u}``: elements of the kernel fixing the upper place ``u``."""
        return Subgroup(self.upper.group,
                        tuple(g for g in self.kernel.elements if self.upper.act(g, u) == u))

    def over_lower(self, u: int) -> bool:
        return self.place_map[u] is not None

    @classmethod
    def identity(cls, site: PlaceSystem) -> "Tower":
        return cls(site, site, tuple(site.group.elements), tuple(range(site.place_count)))

    @classmethod
    def from_json(cls, data: Mapping) -> "Tower":
        try:
            lower = PlaceSystem.from_json(data["lower"])
            upper = PlaceSystem.from_json(data["upper"])
            quotient = tuple(int(x) for x in data["quotient"])
            raw = data["place_map"]
        except KeyError as exc:
            raise MalformedSiteError(f"tower: missing field {exc}") from None
        pm = []
        for w in upper.labels:
            target = raw.get(w)
            pm.append(lower.place_index(str(target)) if target is not None else None)
        return cls(lower, upper, quotient, tuple(pm))

    def to_json(self) -> dict:
        return {
            "lower": self.lower.to_json(),
            "upper": self.upper.to_json(),
            "quotient": list(self.quotient),
            "place_map": {self.upper.labels[u]: self.lower.labels[w]
                          for u, w in enumerate(self.place_map) if w is not None},
        }


@dataclass(frozen=True)
class TowerReport:
    clauses: Mapping[str, bool]
    failures: tuple[str, ...]
    lower: SiteReport
    upper: SiteReport

    @property
    def ok(self) -> bool:
        return all(self.clauses.values())

    def to_json(self) -> dict:
        return {
            "clauses": {k: "pass" if v else "fail" for k, v in sorted(self.clauses.items())},
            "failures": list(self.failures),
            "lower": self.lower.to_json(),
            "upper": self.upper.to_json(),
        }


def validate_tower(t: Tower) -> TowerReport:
    lo, up = t.lower, t.upper
    GK, GE = up.group, lo.group
    failures = []
    clauses = {}

    hom = all(0 <= x < GE.order for x in t.quotient) and GK.is_homomorphism(GE, t.quotient)
    onto = set(t.quotient) == set(GE.elements)
    clauses["quotient_homomorphism"] = hom and onto
    if not hom:
        failures.append("quotient does not respect the Cayley tables")
    elif not onto:
        failures.append("quotient is not surjective")

    covered = all(x >= 0 for x in t.lower_in_upper)
    clauses["rational_places_contained"] = covered
    if not covered:
        failures.append("some lower rational place is missing upstairs")

    fibers_ok = True
    for u, w in enumerate(t.place_map):
        over = t.rational_map[up.fiber[u]]
        if (w is None) != (over is None) or (w is not None and lo.fiber[w] != over):
            fibers_ok = False
            failures.append(f"place {up.labels[u]} is not mapped over its rational place")
    clauses["place_map_fibers"] = fibers_ok

    equivariant = fibers_ok and hom
    if equivariant:
        for g in GK.elements:
            for u, w in enumerate(t.place_map):
                if w is None:
                    continue
                if t.place_map[up.act(g, u)] != lo.act(t.quotient[g], w):
                    equivariant = False
                    failures.append(f"place map not equivariant at (element {g}, place {up.labels[u]})")
                    break
    clauses["place_map_equivariant"] = equivariant

    image = {w for w in t.place_map if w is not None}
    clauses["place_map_surjective"] = image == set(range(lo.place_count))
    if not clauses["place_map_surjective"]:
        failures.append("place map misses some lower place")

    sections_ok = covered and fibers_ok
    if sections_ok:
        for v, vu in enumerate(t.lower_in_upper):
            if t.place_map[up.section[vu]] != lo.section[v]:
                sections_ok = False
                failures.append(f"upper section over {lo.rational_labels[v]} does not lie over the lower section")
    clauses["section_compatible"] = sections_ok

    onto_local = hom and equivariant
    if onto_local:
        for u, w in enumerate(t.place_map):
            if w is None:
                continue
            image = {t.quotient[g] for g in up.stabilizer(u).elements}
            if image != set(lo.stabilizer(w).elements):
                onto_local = False
                failures.append(f"decomposition group of {up.labels[u]} does not map onto that of {lo.labels[w]}")
                break
    clauses["decomposition_groups_surject"] = onto_local

    lr, ur = validate_site(lo), validate_site(up)
    clauses["lower_condition4"] = lr.condition4
    clauses["upper_condition4"] = ur.condition4
    if not lr.condition4:
        failures.append("lower level fails the fixed-point condition")
    if not ur.condition4:
        failures.append("upper level fails the fixed-point condition")
    return TowerReport(clauses, tuple(failures), lr, ur)
