import numpy as np
import pytest
from hypothesis import given, strategies as st

from gerbecoh.gmod import GammaModule, cyclic_group, small_groups, tate_hm1
from gerbecoh.samples import coset_site, random_isogeny_datum, random_site, random_tower
from gerbecoh.sites import Tower
from gerbecoh.tn import (IncoherentCollection, IsogenyDatum, IsogenyError, LocalGroupMismatch, coherence,
                         default_section, global_group, global_target, globalize, local_group, localize,
                         localize_all, localize_value, reductive_sequence, shriek, sl2_datum, sum_zero_module,
                         support_reduce, upper_group, witness_in_augmentation)
from gerbecoh.zlat import IntMatrix, quotient_presentation, solve_in_lattice

GROUPS = small_groups(6)


def random_setup(gi, seed, max_places=6):
    rng = np.random.default_rng(seed)
    g = GROUPS[gi]
    d = random_isogeny_datum(g, rng)
    p = random_site(g, rng, max_places=max_places)
    return rng, d, p


def exponent(factors):
    out = 1
    for f in factors:
        out = out * f // np.gcd(out, f)
    return out


# groups ---------------------------------------------------------------------------------


def test_trivial_group_global_is_zero():
    g = cyclic_group(1)
    d = IsogenyDatum(g, GammaModule.lattice(g, [IntMatrix.identity(1)]), IntMatrix.from_rows([[3]]))
    assert global_group(d, coset_site(g, [[0], [0], [0]])).group.order == 1


def test_sign_datum_groups(sign, c2_site):
    gg = global_group(sign, c2_site)
    assert gg.group.invariant_factors == (4,)
    assert gg.norm_check.ok
    assert local_group(sign, [0]).invariant_factors == ()
    assert local_group(sign, [0, 1]).invariant_factors == (4,)


def test_sl2_local_group(sl2):
    assert local_group(sl2, [0, 1]).invariant_factors == (2,)
    assert local_group(sl2, [0]).invariant_factors == (2,)


def test_equal_lattices_match_tate(c2_site, rng):
    for character in [(1, 1), (1, -1)]:
        ybar = GammaModule.lattice(c2_site.group, [IntMatrix.from_rows([[c]]) for c in character])
        d = IsogenyDatum(c2_site.group, ybar, IntMatrix.identity(1))
        module, _ = sum_zero_module(d, c2_site)
        assert global_group(d, c2_site).group.invariant_factors == tate_hm1(module).invariant_factors


@given(st.integers(0, len(GROUPS) - 1), st.integers(0, 2 ** 32 - 1))
def test_equal_lattices_match_tate_random(gi, seed):
    rng, d, p = random_setup(gi, seed)
    same = IsogenyDatum(d.group, d.ybar, IntMatrix.identity(d.rank))
    module, basis = sum_zero_module(same, p)
    gg = global_group(same, p)
    assert gg.group.invariant_factors == tate_hm1(module).invariant_factors
    # the identity on representatives: Tate generators are global representatives
    for x in tate_hm1(module).generators():
        assert gg.contains(basis @ x)


@given(st.integers(0, len(GROUPS) - 1), st.integers(0, 2 ** 32 - 1))
def test_norm_kernel_equals_torsion(gi, seed):
    _, d, p = random_setup(gi, seed)
    gg = global_group(d, p)
    assert gg.norm_check.ok


def test_global_group_not_killed_by_group_order(sign, c2_site):
    # Z/4 for a group of order 2: the bound that holds is |Γ| times the exponent of Ȳ/Y
    gg = global_group(sign, c2_site)
    assert gg.group.exponent == 4 and c2_site.group.order == 2
    x = gg.representative([1])
    assert any(gg.coordinates([2 * c for c in x]))


@given(st.integers(0, len(GROUPS) - 1), st.integers(0, 2 ** 32 - 1))
def test_global_and_local_exponents_bounded(gi, seed):
    _, d, p = random_setup(gi, seed)
    index = exponent(quotient_presentation(d.rank, d.y_basis).invariant_factors)
    bound = d.group.order * index
    assert bound % global_group(d, p).group.exponent == 0
    for h in d.group.subgroups():
        assert bound % local_group(d, h).exponent == 0


def test_unstable_sublattice_rejected(c2):
    swap = GammaModule.lattice(c2, [IntMatrix.identity(2), IntMatrix.from_rows([[0, 1], [1, 0]])])
    with pytest.raises(IsogenyError, match="not stable"):
        IsogenyDatum(c2, swap, IntMatrix.diagonal([1, 2]))
    with pytest.raises(IsogenyError, match="finite index"):
        IsogenyDatum(c2, swap, IntMatrix.from_rows([[1, 1], [1, 1]]))
    data = {"rank_ybar": 2, "action": [[[1, 0], [0, 1]], [[0, 1], [1, 0]]], "y_basis": [[1, 0], [0, 2]]}
    with pytest.raises(IsogenyError):
        IsogenyDatum.from_json(data, c2)


def test_datum_json_round_trip(sl2):
    back = IsogenyDatum.from_json(sl2.to_json(), sl2.group)
    assert back.to_json() == sl2.to_json() and back.is_reductive


# support reduction -------------------------------------------------------------------------


def test_reduce_section_supported_is_unchanged(sign, c2_site):
    x = globalize(sign, c2_site, {"v2": [1], "v3": [-1]}).representative
    red = support_reduce(sign, c2_site, x)
    assert red.representative == tuple(x) and not any(red.witness) and not red.steps


def test_reduce_single_value(sign, c2_site):
    # y at the non-section place over the split place, balanced at an inert section place
    p = c2_site
    x = [0] * p.place_count
    w = p.place_index("w1_2")
    x[w] = 2
    x[p.dot(1)] = -2
    red = support_reduce(sign, p, x)
    assert len(red.steps) == 1
    step = red.steps[0]
    assert step.place == w and p.act(step.element, w) in p.section_set
    assert p.act(step.element, step.fixed_place) == step.fixed_place
    # y' = y - (δ_w - δ_v0) y_w + σ(δ_w - δ_v0) y_w, with σ = -1 on values
    expected = list(x)
    expected[w] -= 2
    expected[step.fixed_place] += 2
    expected[p.act(step.element, w)] += -2
    expected[step.fixed_place] -= -2
    assert list(red.representative) == expected
    assert all(red.representative[u] == 0 for u in range(p.place_count) if u not in p.section_set)


@given(st.integers(0, len(GROUPS) - 1), st.integers(0, 2 ** 32 - 1))
def test_reduce_random(gi, seed):
    rng, d, p = random_setup(gi, seed)
    gg = global_group(d, p)
    x = gg.random_element(rng).representative
    red = support_reduce(d, p, x, rng)
    r = d.rank
    for w in range(p.place_count):
        if w not in p.section_set:
            assert not any(red.representative[w * r:(w + 1) * r])
    assert len(red.steps) <= p.place_count - p.s_count
    assert witness_in_augmentation(d, p, red.witness)
    assert gg.equal(x, red.representative)


def test_reduce_rejects_bad_input(sign, c2_site):
    with pytest.raises(LocalGroupMismatch):
        support_reduce(sign, c2_site, [1, 0, 0, 0])


# localization ----------------------------------------------------------------------------------


def test_localize_section_supported(sign, c2_site):
    gg = global_group(sign, c2_site)
    x = globalize(sign, c2_site, {"v2": [1], "v3": [-1]}).representative
    loc = localize_all(gg, x)
    assert loc["v2"].representative == (1,) and loc["v3"].representative == (-1,)
    assert not any(loc["v1"].representative)


@given(st.integers(0, len(GROUPS) - 1), st.integers(0, 2 ** 32 - 1))
def test_localize_independent_of_representatives(gi, seed):
    rng, d, p = random_setup(gi, seed)
    gg = global_group(d, p)
    x = gg.random_element(rng).representative
    for v in range(p.s_count):
        gv = p.stabilizer(p.dot(v))
        grp = local_group(d, gv)
        values = []
        for _ in range(3):
            # the trivial coset keeps the identity; only the others vary
            reps = [0 if 0 in c else c[int(rng.integers(len(c)))] for c in gv.right_cosets()]
            values.append(grp.coordinates(localize_value(d, p, x, v, reps)))
        assert values[0] == values[1] == values[2] == list(localize(gg, x, v, rng).coordinates)
        # away from the fiber of v nothing contributes
        away = [0 if p.fiber[w] == v else c for w in range(p.place_count) for c in x[w * d.rank:(w + 1) * d.rank]]
        assert not any(localize_value(d, p, away, v, [min(c) for c in gv.right_cosets()]))


# coherence and globalization ---------------------------------------------------------------------


def test_sign_coherence(sign, c2_site):
    assert coherence(sign, c2_site, {"v2": [1], "v3": [-1]}).coherent
    res = coherence(sign, c2_site, {"v2": [1]})
    assert not res.coherent
    target = global_target(sign)
    assert list(res.obstruction_coordinates) == target.coordinates([1])
    assert target.element_order(list(res.obstruction)) == 4


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_sl2_parity(sl2, k):
    p = coset_site(sl2.group, [[0]] + [[0, 1]] * k)
    for j in range(k + 1):
        col = {f"v{i + 2}": [1] for i in range(j)}
        assert coherence(sl2, p, col).coherent == (j % 2 == 0)


def test_mismatched_local_class(sign, c2_site):
    with pytest.raises(LocalGroupMismatch):
        coherence(sign, c2_site, {"v1": [1]})
    with pytest.raises(LocalGroupMismatch):
        coherence(sign, c2_site, {"v2": [1, 0]})


def test_globalize_examples(sign, c2_site):
    zero = globalize(sign, c2_site, {})
    assert not any(zero.representative)
    x = globalize(sign, c2_site, {"v2": [1], "v3": [-1]})
    assert x.as_mapping() == {"w2_1": [1], "w3_1": [-1]}
    with pytest.raises(IncoherentCollection) as err:
        globalize(sign, c2_site, {"v2": [1]})
    assert err.value.obstruction


@given(st.integers(0, len(GROUPS) - 1), st.integers(0, 2 ** 32 - 1))
def test_exactness_and_round_trip(gi, seed):
    rng, d, p = random_setup(gi, seed)
    gg = global_group(d, p)
    x = gg.random_element(rng).representative
    loc = localize_all(gg, x, rng)
    assert coherence(d, p, loc).coherent
    back = globalize(d, p, loc, gg)
    again = localize_all(gg, back.representative, rng)
    for v, c in loc.items():
        assert again[v].coordinates == c.coordinates
    r = d.rank
    assert all(not any(back.representative[w * r:(w + 1) * r]) for w in range(p.place_count)
               if w not in p.section_set)


def test_sl2_globalize(sl2):
    p = coset_site(sl2.group, [[0], [0, 1], [0, 1]])
    gg = global_group(sl2, p)
    x = globalize(sl2, p, {"v2": [1], "v3": [1]}, gg)
    loc = localize_all(gg, x.representative)
    assert loc["v2"].coordinates == loc["v3"].coordinates != (0,)


# level change -------------------------------------------------------------------------------------


def test_identity_shriek(sign, c2_site):
    gg = global_group(sign, c2_site)
    x = globalize(sign, c2_site, {"v2": [1], "v3": [-1]}).representative
    up = shriek(Tower.identity(c2_site), gg, x)
    assert up.representative == tuple(x)


def test_shriek_along_c4(sign, c4_tower, rng):
    gg = global_group(sign, c4_tower.lower)
    x = globalize(sign, c4_tower.lower, {"v2": [1], "v3": [-1]}).representative
    upper = upper_group(c4_tower, gg)
    y = shriek(c4_tower, gg, x, upper=upper)
    other = shriek(c4_tower, gg, x, default_section(c4_tower, rng), upper=upper)
    assert y.coordinates == other.coordinates
    for v in range(c4_tower.lower.s_count):
        a = localize(gg, x, v)
        b = localize(upper, list(y.representative), c4_tower.lower_in_upper[v])
        assert local_group(sign, c4_tower.lower.stabilizer(c4_tower.lower.dot(v))).equal(
            list(a.representative), list(b.representative))


@given(st.sampled_from(small_groups(8)[2:]), st.integers(0, 2 ** 32 - 1))
def test_shriek_random(group, seed):
    rng = np.random.default_rng(seed)
    t = random_tower(group, rng, max_places=6)
    d = random_isogeny_datum(t.lower.group, rng)
    gg = global_group(d, t.lower)
    upper = upper_group(t, gg)
    x = gg.random_element(rng).representative
    first = shriek(t, gg, x, upper=upper)
    second = shriek(t, gg, x, default_section(t, rng), upper=upper, check=False)
    assert first.coordinates == second.coordinates
    for v in range(t.lower.s_count):
        a = localize(gg, x, v)
        b = localize(upper, list(first.representative), t.lower_in_upper[v])
        assert local_group(d, t.lower.stabilizer(t.lower.dot(v))).equal(list(a.representative),
                                                                        list(b.representative))


# the reductive sequence ------------------------------------------------------------------------


def test_sl2_sequence(sl2, c2_site):
    rep = reductive_sequence(sl2, c2_site)
    assert rep.ok


@given(st.integers(0, len(GROUPS) - 1), st.integers(0, 2 ** 32 - 1))
def test_reductive_sequence_random(gi, seed):
    rng = np.random.default_rng(seed)
    g = GROUPS[gi]
    p = random_site(g, rng, max_places=6)
    assert reductive_sequence(sl2_datum(g), p, rng, samples=5).ok


def test_sequence_needs_coroots(sign, c2_site):
    with pytest.raises(IsogenyError):
        reductive_sequence(sign, c2_site)


def test_solver_sanity():
    # the membership oracle used by the witness check
    assert solve_in_lattice(IntMatrix.from_rows([[2, 0], [0, 2]]), [2, 4]) == [1, 2]
