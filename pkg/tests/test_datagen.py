import numpy as np
import pytest

from qsep.criteria import SeparableBank, Verdict, min_pt_eigenvalue, ppt_check, witness_value
from qsep.datagen import (
    ClassLabel,
    GenConfig,
    GeneratorKind,
    LabeledSample,
    Provenance,
    RobustnessRegion,
    augment,
    generate_nppt,
    generate_ppt,
    generate_ppt_ent,
    generate_sep,
    label_violations,
    random_local_unitary_transform,
    region_g,
    region_member,
    sample_in_region,
)
from qsep.errors import GeneratorStarvedError, InvalidArgumentError, RegionEmptyError
from qsep.qcore import BipartiteDims, DensityMatrix, mixture_matrix, random_separable

D22 = BipartiteDims(2, 2)
D33 = BipartiteDims(3, 3)


def g_reference(w, rho, nu):
    """Literal transcription of the noise bound for a unit-trace witness."""
    p = rho.shape[0]
    lam = -np.trace(w @ rho).real
    ev = np.linalg.eigvalsh(w)
    num, trp = np.sum(ev > 0), ev[ev > 0].sum()
    a = (1 - nu) / (p - 1 - nu)
    b = num * (nu * (1 + p * lam) - 1) / (p * trp + num * (nu * (1 + p * lam) - 1))
    return min(a, b), 1 / (1 + lam * p)


def test_generate_sep(tmp_path):
    s1 = generate_sep(D33, 10, 5)
    s2 = generate_sep(D33, 10, 5)
    assert len(s1) == 10
    for a, b in zip(s1, s2):
        np.testing.assert_array_equal(a.rho.entries, b.rho.entries)
        assert a.label is ClassLabel.SEP and a.witness is None
        assert ppt_check(a.rho).verdict is not Verdict.ENTANGLED
        assert a.provenance.generator is GeneratorKind.SEPARABLE_CONSTRUCTION
        assert 1 <= a.provenance.k_or_r <= 81
    # the ensemble reaches both sides of the separable-ball bound
    purity = np.array([s.rho.purity() for s in generate_sep(D33, 200, 6)])
    assert purity.min() < 1 / 8 < purity.max()


def test_generate_sep_chunks_match():
    whole = generate_sep(D33, 6, 3)
    tail = generate_sep(D33, 3, 3, start=3)
    for a, b in zip(whole[3:], tail):
        np.testing.assert_array_equal(a.rho.entries, b.rho.entries)
        assert a.id == b.id


def test_generate_nppt():
    out = generate_nppt(D33, 10, 1, k_range=(1, 4))
    for s in out:
        assert min_pt_eigenvalue(s.rho.entries, 3, 3) < -1e-10
        assert 1 <= s.provenance.k_or_r <= 4
    with pytest.raises(InvalidArgumentError):
        generate_nppt(D33, 1, 1, k_range=(1, 40))
    # k = 1: random pure bipartite states are entangled with probability one
    stats = {}
    generate_nppt(D33, 200, 2, k_range=(1, 1), diagnostics=stats)
    assert stats["accepted"] / stats["draws"] == 1.0


def test_nppt_starves_for_large_k():
    with pytest.raises(GeneratorStarvedError) as err:
        generate_nppt(D33, 1, 0, k_range=(36, 36), config=GenConfig(starve_window=300))
    assert err.value.diagnostics["ppt_rejected"] == 300


@pytest.mark.parametrize("dims", [BipartiteDims(2, 2), BipartiteDims(2, 3)])
def test_ppt_ent_starves_where_ppt_is_exact(dims):
    with pytest.raises(GeneratorStarvedError) as err:
        generate_ppt_ent(dims, 1, 0, config=GenConfig(starve_window=2000))
    assert err.value.diagnostics["accepted"] == 0
    assert err.value.diagnostics["ppt_candidates"] == 0


def test_ppt_ent_invariants(small_ppt_ent):
    samples, stats = small_ppt_ent
    assert len(samples) == 12
    # measured acceptance per draw at 3x3 with k in [9, 36]: about 0.2
    assert 0.05 < stats["accepted"] / stats["draws"] < 0.6
    bank = SeparableBank.cached(D33, 2000, samples[0].provenance.validation_seed)
    for s in samples:
        assert s.label is ClassLabel.PPT_ENT
        assert ppt_check(s.rho).verdict is Verdict.INCONCLUSIVE
        assert label_violations(s, bank=bank) == []
        assert 9 <= s.provenance.k_or_r <= 36


def test_labeled_sample_witness_rule():
    rho = random_separable(D33, 2, 0)
    prov = Provenance(0, GeneratorKind.SEPARABLE_CONSTRUCTION, 2)
    with pytest.raises(InvalidArgumentError):
        LabeledSample("x", rho, ClassLabel.PPT_ENT, prov)
    s = LabeledSample("x", rho, ClassLabel.SEP, prov)
    assert label_violations(s) == []
    bad = LabeledSample("y", rho, ClassLabel.NPPT_ENT, prov)
    assert label_violations(bad)


def test_region_g_two_paths(small_ppt_ent):
    s = small_ppt_ent[0][0]
    region = RobustnessRegion.from_witness(s.rho, s.witness)
    assert 0 < region.nu_lower < 1 and region.num_pos >= 1 and region.trace_pos > 0
    nu = (region.nu_lower + 1) / 2
    ref, f_ref = g_reference(region.witness.matrix, s.rho.entries, nu)
    np.testing.assert_allclose(region_g(region, nu), ref, rtol=1e-12)
    np.testing.assert_allclose(region.nu_lower, f_ref, rtol=1e-12)
    assert region_g(region, nu) > 0
    # both ends of the visibility interval pinch the bound to zero
    assert region_g(region, region.nu_lower + 1e-9) < 1e-6
    assert region_g(region, 1 - 1e-9) < 1e-6
    for bad in (region.nu_lower, 1.0, 0.0):
        with pytest.raises(InvalidArgumentError):
            region_g(region, bad)


def test_region_rejects_non_detecting_witness(small_ppt_ent):
    s = small_ppt_ent[0][0]
    mixed = DensityMatrix.maximally_mixed(D33)
    with pytest.raises(RegionEmptyError):
        RobustnessRegion.from_witness(mixed, s.witness)


def test_sample_in_region(small_ppt_ent):
    samples = small_ppt_ent[0]
    rng = np.random.default_rng(0)
    for s in samples:
        region = RobustnessRegion.from_witness(s.rho, s.witness)
        for _ in range(10):
            out, k = sample_in_region(region, rng)
            assert ppt_check(out).verdict is not Verdict.ENTANGLED
            assert witness_value(region.witness, out) < 0
            assert 1 <= k <= 9
    region = RobustnessRegion.from_witness(samples[0].rho, samples[0].witness)
    nu = 1 - 1e-7
    out, _ = sample_in_region(region, rng, nu=nu, mu=0.0)
    assert np.linalg.norm(out.entries - samples[0].rho.entries) < 1e-6
    sigma = mixture_matrix(9, 3, 1)
    np.testing.assert_allclose(np.trace(region_member(region, nu, 0.1, sigma)), 1.0)


def test_local_unitary_transform():
    rng = np.random.default_rng(4)
    mixed = DensityMatrix.maximally_mixed(D33)
    np.testing.assert_allclose(random_local_unitary_transform(mixed, rng).entries, mixed.entries, atol=1e-12)
    for _ in range(100):
        rho = DensityMatrix(mixture_matrix(9, int(rng.integers(1, 30)), rng), D33)
        out = random_local_unitary_transform(rho, rng)
        np.testing.assert_allclose(out.eigvalsh(), rho.eigvalsh(), atol=1e-10)
        assert ppt_check(out).verdict is ppt_check(rho).verdict
        sep = random_local_unitary_transform(random_separable(D33, 3, rng), rng)
        assert ppt_check(sep).verdict is not Verdict.ENTANGLED


def test_augment(small_ppt_ent):
    seeds = small_ppt_ent[0][:10]
    out = augment(seeds, 100, unitary_fraction=0.5, seed=3)
    assert len(out) == 100
    kinds = {s.provenance.generator for s in out}
    assert kinds == {GeneratorKind.AUGMENT_REGION, GeneratorKind.AUGMENT_UNITARY}
    for i, s in enumerate(out):
        assert s.provenance.parent_id == seeds[i % 10].id
        assert ppt_check(s.rho).verdict is not Verdict.ENTANGLED
        assert witness_value(s.witness, s.rho) < 0
        assert label_violations(s) == []
    again = augment(seeds, 100, unitary_fraction=0.5, seed=3)
    for a, b in zip(out, again):
        np.testing.assert_array_equal(a.rho.entries, b.rho.entries)


def test_augment_rejects_bad_input(small_ppt_ent):
    seeds = small_ppt_ent[0][:2]
    with pytest.raises(InvalidArgumentError):
        augment(seeds, 0)
    with pytest.raises(InvalidArgumentError):
        augment([], 5)
    with pytest.raises(InvalidArgumentError):
        augment(generate_sep(D33, 1, 0), 5)
    with pytest.raises(InvalidArgumentError):
        augment(seeds, 5, unitary_fraction=1.5)


def test_generate_ppt():
    out = generate_ppt(D33, 5, 0)
    for rho, k in out:
        assert ppt_check(rho).verdict is not Verdict.ENTANGLED
        assert 9 <= k <= 36


def test_region_bound_versus_top_eigenvector(small_ppt_ent):
    # the g bound charges the noise tr(W+)/num per unit weight, while a pure
    # sigma on the top eigenvector of W costs lambda_max; near mu = g the
    # latter can flip the witness sign even though the formula allows it
    flipped = 0
    for s in small_ppt_ent[0]:
        region = RobustnessRegion.from_witness(s.rho, s.witness)
        ev, vec = np.linalg.eigh(region.witness.matrix)
        top = np.outer(vec[:, -1], vec[:, -1].conj())
        nu = (region.nu_lower + 1) / 2
        mu = (1 - 1e-9) * region_g(region, nu)
        val = np.trace(region.witness.matrix @ region_member(region, nu, mu, top)).real
        if ev[-1] > region.trace_pos / region.num_pos and mu < (1 - nu) / (region.p - 1 - nu):
            flipped += val > 0
        # a sigma with tr(W sigma) at the budgeted average keeps detection
        avg = region.trace_pos / region.num_pos
        lam, p = region.lambda_rho, region.p
        x = nu * (1 + p * lam) - 1
        assert -(1 - mu) * x / p + mu * avg < 0
    assert flipped > 0


def test_sample_in_region_redraws_and_gives_up(small_ppt_ent):
    s = small_ppt_ent[0][0]
    region = RobustnessRegion.from_witness(s.rho, s.witness)
    # mu far outside the region: sigma dominates and detection is lost
    with pytest.raises(RegionEmptyError):
        sample_in_region(region, 0, nu=(region.nu_lower + 1) / 2, mu=0.99, max_attempts=5)
    with pytest.raises(InvalidArgumentError):
        sample_in_region(region, 0, max_attempts=0)
