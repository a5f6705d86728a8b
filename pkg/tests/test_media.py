"""Medium and diffusion-profile checks against closed forms."""

import math

import pytest

from raylab.errors import SceneValidationError
from raylab.media import (
    DipoleModel,
    HomogeneousMedium,
    dipole_planar_albedo,
    dipole_rd,
    mean_sigma_t,
    medium_arrays,
    phase_isotropic_eval,
    phase_isotropic_sample,
    sample_free_flight,
    transmittance,
)
from raylab.rng import Rng


def test_transmittance_identity_at_zero():
    assert transmittance(0.7, 1.3, 2.0, 0.0) == (1.0, 1.0, 1.0)


def test_transmittance_closed_form():
    t = transmittance(1.0, 1.0, 1.0, 1.0)
    for c in t:
        assert abs(c - math.exp(-1.0)) < 1e-15


def test_transmittance_multiplicative():
    st = (0.3, 1.1, 2.7)
    for d1, d2 in ((0.2, 0.9), (1.5, 0.01), (3.0, 4.0)):
        a = transmittance(*st, d1)
        b = transmittance(*st, d2)
        c = transmittance(*st, d1 + d2)
        for x, y in zip((a[0] * b[0], a[1] * b[1], a[2] * b[2]), c):
            assert abs(x - y) < 1e-12, f"T({d1})T({d2}) != T({d1 + d2})"


def test_free_flight_vacuum_passes_through():
    t, sigma_bar = sample_free_flight(0.0, 0.0, 0.0, 0.837)
    assert math.isinf(t) and sigma_bar == 0.0


def test_free_flight_mean_distance():
    rng = Rng(5)
    n = 100000
    total = 0.0
    for _ in range(n):
        t, _ = sample_free_flight(2.0, 2.0, 2.0, rng.next_float())
        total += t
    mean = total / n
    assert abs(mean - 0.5) < 0.01, f"mean free flight {mean}, want 0.5"


def test_free_flight_transmittance_unbiased():
    # Fraction of flights clearing a unit slab, weighted per channel by
    # T_channel / survival, must estimate exp(-sigma_channel) per channel.
    st = (0.5, 1.0, 2.0)
    sigma_bar = mean_sigma_t(*st)
    rng = Rng(11)
    n = 200000
    acc = [0.0, 0.0, 0.0]
    for _ in range(n):
        t, _ = sample_free_flight(*st, rng.next_float())
        if t > 1.0:
            survival = math.exp(-sigma_bar)
            tr = transmittance(*st, 1.0)
            for c in range(3):
                acc[c] += tr[c] / survival
    for c in range(3):
        est = acc[c] / n
        want = math.exp(-st[c])
        # Bernoulli-with-weight variance, three standard errors.
        w = math.exp(-st[c]) / math.exp(-sigma_bar)
        p = math.exp(-sigma_bar)
        se = math.sqrt(max(p * w * w - want * want, 0.0) / n)
        assert abs(est - want) < 3.0 * se + 1e-9, (
            f"channel {c}: transmittance {est} vs {want} (se {se})"
        )


def test_phase_isotropic():
    assert abs(phase_isotropic_eval() - 1.0 / (4.0 * math.pi)) < 1e-15
    rng = Rng(3)
    n = 100000
    sx = sy = sz = 0.0
    for _ in range(n):
        u1, u2 = rng.next_2d()
        x, y, z, pdf = phase_isotropic_sample(u1, u2)
        assert abs(pdf - 1.0 / (4.0 * math.pi)) < 1e-15
        assert abs(x * x + y * y + z * z - 1.0) < 1e-9
        sx += x
        sy += y
        sz += z
    mean_len = math.sqrt(sx * sx + sy * sy + sz * sz) / n
    assert mean_len < 0.01, f"isotropic phase mean direction {mean_len}"


# ---------------------------------------------------------------------------
# Diffusion dipole


def _planar_albedo_closed_form(sigma_a, sigma_s_prime, eta):
    """Analytic integral of the two-pole profile over the plane.

    Both pole terms integrate exactly: int z (s d + 1) e^(-s d) / d^3 r dr
    has antiderivative -z e^(-s d) / d, so each pole contributes its
    exponential at depth, giving alpha'/2 (e^(-x) + e^(-x(1 + 4A/3)))
    with x = sqrt(3 (1 - alpha')).
    """
    sigma_t_prime = sigma_a + sigma_s_prime
    alpha_prime = sigma_s_prime / sigma_t_prime
    fdr = -1.440 / (eta * eta) + 0.710 / eta + 0.668 + 0.0636 * eta
    a = (1.0 + fdr) / (1.0 - fdr)
    x = math.sqrt(3.0 * (1.0 - alpha_prime))
    return 0.5 * alpha_prime * (math.exp(-x) + math.exp(-x * (1.0 + 4.0 / 3.0 * a)))


def test_dipole_no_scatter_limit():
    for r in (0.0, 0.5, 2.0):
        assert dipole_rd(r, 1.0, 0.0, 1.3) == 0.0


def test_dipole_far_field_falloff():
    # Effective transport decay exp(-sigma_tr r) with sigma_tr =
    # sqrt(3 sigma_a sigma_t'); this profile gives sigma_tr = 1.5 sigma_t',
    # so the 1..10 mfp span covers ~13 decay lengths plus the 1/d^3 falloff.
    sigma_a, sigma_s = 3.0, 1.0
    mfp = 1.0 / (sigma_a + sigma_s)
    near = dipole_rd(1.0 * mfp, sigma_a, sigma_s, 1.3)
    far = dipole_rd(10.0 * mfp, sigma_a, sigma_s, 1.3)
    assert far < 1e-6 * near, f"far field {far} vs near {near}"


def test_dipole_nonnegative_and_monotone_decay():
    profiles = ((0.5, 9.5), (0.1, 5.0), (2.0, 8.0))
    for sigma_a, sigma_s in profiles:
        mfp = 1.0 / (sigma_a + sigma_s)
        prev = None
        for i in range(64):
            r = (1.0 + 19.0 * i / 63.0) * mfp
            v = dipole_rd(r, sigma_a, sigma_s, 1.3)
            assert v >= 0.0
            if prev is not None:
                assert v < prev, f"profile ({sigma_a},{sigma_s}) not decaying at r={r}"
            prev = v
        # Non-negativity also near the origin, inside the 1 mfp peak.
        for r in (0.0, 0.1 * mfp, 0.5 * mfp):
            assert dipole_rd(r, sigma_a, sigma_s, 1.3) >= 0.0


def test_dipole_planar_albedo_energy_bound():
    # Albedo-1 profile: zero absorption.
    model = DipoleModel((0.0, 0.0, 0.0), (10.0, 10.0, 10.0), eta=1.3)
    alb = dipole_planar_albedo(model)
    for c in alb:
        assert c <= 1.0, f"planar albedo {c} exceeds 1"
        assert c > 0.98, f"zero-absorption albedo should be near 1, got {c}"


def test_dipole_planar_albedo_matches_closed_form():
    cases = ((0.01, 1.0), (0.1, 1.0), (0.5, 9.5), (1.0, 4.0), (3.0, 3.0))
    for sigma_a, sigma_s in cases:
        model = DipoleModel((sigma_a,) * 3, (sigma_s,) * 3, eta=1.4)
        got = dipole_planar_albedo(model)[0]
        want = _planar_albedo_closed_form(sigma_a, sigma_s, 1.4)
        assert abs(got - want) < 0.005 * max(want, 1e-3), (
            f"sigma_a={sigma_a}: quadrature {got} vs closed form {want}"
        )


def test_medium_arrays_and_validation():
    media = [HomogeneousMedium((0.1, 0.2, 0.3), (1.0, 1.0, 1.0))]
    sa, ss = medium_arrays(media)
    assert sa[0].tolist() == [0.1, 0.2, 0.3]
    assert ss[0].tolist() == [1.0, 1.0, 1.0]
    assert media[0].sigma_t() == (1.1, 1.2, 1.3)
    assert not media[0].is_vacuum() and media[0].has_scatter()
    assert HomogeneousMedium((0.0,) * 3, (0.0,) * 3).is_vacuum()
    with pytest.raises(SceneValidationError):
        medium_arrays([HomogeneousMedium((-0.1, 0.0, 0.0), (0.0, 0.0, 0.0))])
