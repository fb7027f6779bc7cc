import numpy as np
import pytest
from hypothesis import given, strategies as st

from gerbecoh.gmod import GammaModule, cohomology_brute, cyclic_group, small_groups
from gerbecoh.samples import random_finite_module
from gerbecoh.shapiro import (CochainError, CosetSection, InducedModule, SectionError, SubgroupCochains,
                              all_tuples, build_section, evaluate_at_identity, homogeneous_differential,
                              random_two_cocycle, sh4_cochain, shapiro_check, shapiro_cochain)
from gerbecoh.zlat import IntMatrix

C4 = cyclic_group(4)
PAIRS = [(g, h) for g in small_groups(6) for h in g.subgroups()]


def sign_z4(delta):
    """Z/4 with the non-trivial element of a two-element group acting by -1."""
    return GammaModule(delta.as_group, 1, IntMatrix.from_rows([[4]]),
                       (IntMatrix.identity(1), IntMatrix.from_rows([[-1]])))


def c4_pair():
    delta = next(h for h in C4.subgroups() if h.order == 2)
    return delta, sign_z4(delta)


def is_zero_cochain(module, c):
    return all(module.is_zero(v) for v in c.values())


# sections ------------------------------------------------------------------------------


def test_whole_group_section():
    whole = next(h for h in C4.subgroups() if h.order == 4)
    sec = build_section(C4, whole)
    assert sec.reps == (0,) and sec.r_table == tuple(C4.elements) and not sec.check()


def test_trivial_subgroup_section(rng):
    g = small_groups(6)[-1]
    trivial = next(h for h in g.subgroups() if h.order == 1)
    sec = build_section(g, trivial, rng=rng)
    assert sorted(sec.reps) == list(g.elements)
    assert set(sec.r_table) == {0} and not sec.check()


def test_tower_section_compatible():
    delta, _ = c4_pair()
    sec = build_section(C4, delta, normal=delta.elements)
    assert not sec.check() and sec.lower is not None
    assert sec.compatible_with(delta.elements)
    # s(a)^-1 s(ab) in the normal subgroup, checked directly
    for a in C4.elements:
        for b in delta.elements:
            assert C4.mul(C4.inv(sec.section(a)), sec.section(C4.mul(a, b))) in delta.elements


def test_unnormalized_section_rejected():
    delta, _ = c4_pair()
    with pytest.raises(SectionError):
        CosetSection(C4, delta, (2, 1))
    with pytest.raises(SectionError):
        CosetSection(C4, delta, (0, 2))


@given(st.integers(0, len(PAIRS) - 1), st.integers(0, 2 ** 32 - 1))
def test_random_sections_satisfy_identities(i, seed):
    g, h = PAIRS[i]
    rng = np.random.default_rng(seed)
    assert not build_section(g, h, rng=rng).check()
    normals = [k for k in g.subgroups()
               if all(g.mul(g.mul(x, y), g.inv(x)) in k.elements for x in g.elements for y in k.elements)]
    k = normals[int(rng.integers(len(normals)))]
    sec = build_section(g, h, normal=k.elements, rng=rng)
    assert not sec.check() and sec.compatible_with(k.elements)


# the cochain map -------------------------------------------------------------------------


def test_whole_group_formula(rng):
    g = small_groups(6)[-1]
    whole = next(h for h in g.subgroups() if h.order == g.order)
    base = random_finite_module(whole.as_group, rng, max_rank=2)
    sec = build_section(g, whole)
    ind = InducedModule(sec, base)
    sc = SubgroupCochains(g, whole, base)
    c = sc.random_cochain(1, rng)
    s = shapiro_cochain(c, 1, sec, ind)
    for t in all_tuples(g.elements, 1):
        for a in g.elements:
            inner = c[tuple(g.mul(g.inv(a), x) for x in t)]
            assert base.equal(ind.evaluate(s[t], a), sc.act(a, inner))


def test_zero_maps_to_zero():
    delta, base = c4_pair()
    sec = build_section(C4, delta)
    ind = InducedModule(sec, base)
    zero = {t: [0] for t in all_tuples(delta.elements, 2)}
    assert is_zero_cochain(ind.module, shapiro_cochain(zero, 2, sec, ind))


def test_c2_in_c4_cocycle_maps_to_cocycle(rng):
    delta, base = c4_pair()
    sec = build_section(C4, delta, rng=rng)
    ind = InducedModule(sec, base)
    for _ in range(3):
        z = random_two_cocycle(base, delta, C4, rng)
        s = shapiro_cochain(z, 2, sec, ind)
        assert is_zero_cochain(ind.module, homogeneous_differential(s, C4.elements, 2, ind.rank))
        assert evaluate_at_identity(ind, s, delta, 2) == {t: list(v) for t, v in z.items()}


def test_non_equivariant_input_rejected():
    delta, base = c4_pair()
    sec = build_section(C4, delta)
    bad = {t: [1 if t == (0, 0) else 0] for t in all_tuples(delta.elements, 1)}
    with pytest.raises(CochainError):
        shapiro_cochain(bad, 1, sec, InducedModule(sec, base))


@given(st.integers(0, len(PAIRS) - 1), st.integers(0, 2 ** 32 - 1))
def test_shapiro_identities(i, seed):
    g, h = PAIRS[i]
    rng = np.random.default_rng(seed)
    base = random_finite_module(h.as_group, rng, max_rank=1 if g.order // h.order >= 3 else 2, max_exponent=6)
    rep = shapiro_check(build_section(g, h, rng=rng), base, rng, samples=1)
    assert rep.ok, rep.to_json()


def test_cohomology_orders_match_brute_force(rng):
    delta, base = c4_pair()
    sec = build_section(C4, delta)
    ind = InducedModule(sec, base)
    for k in (1, 2):
        assert cohomology_brute(base, k).order == cohomology_brute(ind.module, k).order
    rep = shapiro_check(sec, base, rng)
    assert rep.orders[1][0] == cohomology_brute(base, 1).order


# two sections ---------------------------------------------------------------------------


def test_sh4_same_section(rng):
    delta, base = c4_pair()
    sec = build_section(C4, delta, rng=rng)
    z = random_two_cocycle(base, delta, C4, rng)
    res = sh4_cochain(z, sec, sec, base)
    assert res.verified
    ind = InducedModule(sec, base)
    zero = {t: [0] * ind.rank for t in all_tuples(C4.elements, 1)}
    d = homogeneous_differential(zero, C4.elements, 1, ind.rank)
    s1 = shapiro_cochain(z, 2, sec, ind)
    assert is_zero_cochain(ind.module, d) and s1 == shapiro_cochain(z, 2, sec, ind)


def test_sh4_zero_cocycle(rng):
    delta, base = c4_pair()
    sec = CosetSection(C4, delta, (0, 1))
    other = CosetSection(C4, delta, (0, 3))
    zero = {t: [0] for t in all_tuples(delta.elements, 2)}
    res = sh4_cochain(zero, sec, other, base)
    ind = InducedModule(sec, base)
    assert res.verified
    assert is_zero_cochain(ind.module, homogeneous_differential(res.cochain, C4.elements, 1, ind.rank))


def test_sh4_distinct_sections(rng):
    delta, base = c4_pair()
    sec = CosetSection(C4, delta, (0, 1))
    other = CosetSection(C4, delta, (0, 3))
    for _ in range(5):
        z = random_two_cocycle(base, delta, C4, rng)
        for formula in (True, False):
            res = sh4_cochain(z, sec, other, base, try_formula=formula)
            assert res.verified
        assert sh4_cochain(z, sec, other, base, try_formula=False).path == "linear algebra"


def test_sh4_rejects_non_cocycle():
    delta, base = c4_pair()
    sec = build_section(C4, delta)
    sc = SubgroupCochains(C4, delta, base)
    phi = {(delta.elements[1], delta.elements[1]): [1]}
    c = sc.homogeneous(phi, 2)
    assert not all(base.is_zero(v) for v in sc.differential(c, 2).values())
    with pytest.raises(CochainError):
        sh4_cochain(c, sec, sec, base)


@given(st.integers(0, len(PAIRS) - 1), st.integers(0, 2 ** 32 - 1))
def test_sh4_random(i, seed):
    g, h = PAIRS[i]
    rng = np.random.default_rng(seed)
    base = random_finite_module(h.as_group, rng, max_rank=1, max_exponent=6)
    z = random_two_cocycle(base, h, g, rng)
    res = sh4_cochain(z, build_section(g, h, rng=rng), build_section(g, h, rng=rng), base)
    assert res.verified
