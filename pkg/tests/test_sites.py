import numpy as np
import pytest
from hypothesis import given, strategies as st

from gerbecoh.gmod import cyclic_group, small_groups, symmetric_group_3
from gerbecoh.samples import coset_site, random_site, random_tower
from gerbecoh.sites import (MalformedSiteError, PlaceSystem, Tower, decomposition_group, validate_site,
                            validate_tower)

GROUPS = small_groups(8)


def test_c2_site_passes(c2_site):
    rep = validate_site(c2_site)
    assert rep.condition4 and rep.to_json()["condition4"] == "pass"
    # σ fixes the inert section place
    w2 = c2_site.place_index("w2_1")
    assert c2_site.act(1, w2) == w2


def test_split_only_site_fails(c2):
    site = coset_site(c2, [[0]])
    rep = validate_site(site)
    assert not rep.condition4 and rep.unfixed_elements == (1,)


def test_trivial_group_site():
    site = coset_site(cyclic_group(1), [[0], [0]])
    rep = validate_site(site)
    assert rep.ok


def test_condition3_against_supplied_list(c2):
    site = coset_site(c2, [[0], [0, 1]])
    assert validate_site(site).condition3
    only_split = coset_site(c2, [[0], [0]])
    rep = validate_site(only_split)
    assert not rep.condition3 and rep.missing_stabilizers == ((0, 1),)
    data = only_split.to_json()
    data["stabilizer_classes"] = [[0]]
    assert validate_site(PlaceSystem.from_json(data)).condition3


def test_decomposition_groups(c2_site):
    assert decomposition_group(c2_site, c2_site.place_index("w1_1")).elements == (0,)
    assert decomposition_group(c2_site, c2_site.place_index("w2_1")).elements == (0, 1)
    s3 = symmetric_group_3()
    point = next(h for h in s3.subgroups() if h.order == 2)
    site = coset_site(s3, [point.elements])
    stab = decomposition_group(site, site.dot(0))
    assert stab.order == 2
    # orbit-stabilizer: three points
    assert site.place_count == 3 == s3.order // stab.order
    with pytest.raises(IndexError):
        decomposition_group(site, 7)


def test_json_round_trip(c2_site):
    back = PlaceSystem.from_json(c2_site.to_json())
    assert back.to_json() == c2_site.to_json()
    assert back.action == c2_site.action and back.section == c2_site.section


def test_non_equivariant_projection_named(c2_site):
    data = c2_site.to_json()
    data["places"][0]["fiber"] = ["w1_1"]
    data["places"][1]["fiber"] = ["w1_2", "w2_1"]
    with pytest.raises(MalformedSiteError, match=r"element 1, place w1_1"):
        PlaceSystem.from_json(data)


def test_malformed_inputs(c2_site):
    data = c2_site.to_json()
    data["section"] = {"v1": "w2_1", "v2": "w2_1", "v3": "w3_1"}
    with pytest.raises(MalformedSiteError, match="section"):
        PlaceSystem.from_json(data)
    data = c2_site.to_json()
    data["action"] = data["action"][:1]
    with pytest.raises(MalformedSiteError, match="action"):
        PlaceSystem.from_json(data)
    data = c2_site.to_json()
    data["group"]["table"] = [[0, 1], [1, 1]]
    with pytest.raises(MalformedSiteError, match="group"):
        PlaceSystem.from_json(data)


@given(st.integers(0, len(GROUPS) - 1), st.integers(0, 2 ** 32 - 1))
def test_stabilizers_conjugate_along_orbits(gi, seed):
    g = GROUPS[gi]
    site = random_site(g, np.random.default_rng(seed), require_condition4=False)
    for w in range(site.place_count):
        stab = set(site.stabilizer(w).elements)
        for s in g.elements:
            conj = {g.product(s, h, g.inv(s)) for h in stab}
            assert set(site.stabilizer(site.act(s, w)).elements) == conj


@given(st.integers(0, len(GROUPS) - 1), st.integers(0, 2 ** 32 - 1))
def test_fibers_are_orbits(gi, seed):
    g = GROUPS[gi]
    site = random_site(g, np.random.default_rng(seed), require_condition4=False)
    for v in range(site.s_count):
        orbit = {site.act(s, site.dot(v)) for s in g.elements}
        assert orbit == set(site.places_over(v))


@given(st.integers(0, len(GROUPS) - 1), st.integers(0, 2 ** 32 - 1))
def test_condition4_survives_adding_places(gi, seed):
    g = GROUPS[gi]
    rng = np.random.default_rng(seed)
    subs = g.subgroups()
    stabs = [subs[int(rng.integers(len(subs)))].elements for _ in range(int(rng.integers(1, 4)))]
    offsets = [int(rng.integers(g.order)) for _ in stabs]
    site = coset_site(g, stabs, offsets)
    extra = [subs[int(rng.integers(len(subs)))].elements for _ in range(2)]
    bigger = coset_site(g, stabs + extra, offsets + [int(rng.integers(g.order)) for _ in extra])
    if validate_site(site).condition4:
        assert validate_site(bigger).condition4


# towers -----------------------------------------------------------------------


def test_identity_tower(c2_site):
    assert validate_tower(Tower.identity(c2_site)).ok


def test_c4_over_c2_tower(c4_tower):
    rep = validate_tower(c4_tower)
    assert rep.ok, rep.failures
    back = Tower.from_json(c4_tower.to_json())
    assert back.to_json() == c4_tower.to_json() and back.place_map == c4_tower.place_map


def test_tower_section_violation(c4_tower, c2):
    lower = coset_site(c2, [[0], [0, 1], [0, 1]], [1, 0, 0])
    bad = Tower(lower, c4_tower.upper, c4_tower.quotient, c4_tower.place_map)
    rep = validate_tower(bad)
    assert not rep.clauses["section_compatible"]
    assert any("section" in f for f in rep.failures)


def test_tower_bad_quotient(c4_tower):
    bad = Tower(c4_tower.lower, c4_tower.upper, (0, 1, 1, 0), c4_tower.place_map)
    assert not validate_tower(bad).clauses["quotient_homomorphism"]


def test_random_towers_are_valid(rng):
    for g in GROUPS[1:]:
        t = random_tower(g, rng)
        assert validate_tower(t).ok
