import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geohmm.errors import GeometryError
from geohmm.manifold import POINCARE_DISK, SPD2, ManifoldKind, get_manifold, sym_expm, sym_logm
from geohmm.rgauss import RiemannianGaussian
from oracles import disk_dist

E = np.e


def random_disk(rng, n, rmax=0.9):
    r = rmax * np.sqrt(rng.random(n))
    return r * np.exp(2j * np.pi * rng.random(n))


def random_spd(rng, n, scale=1.0):
    v = rng.normal(scale=scale, size=(n, 3))
    S = np.stack([np.stack([v[:, 0], v[:, 1]], -1), np.stack([v[:, 1], v[:, 2]], -1)], -2)
    return sym_expm(S)


def random_points(kind, rng, n):
    return random_disk(rng, n) if kind is ManifoldKind.POINCARE_DISK else random_spd(rng, n)


KINDS = [ManifoldKind.POINCARE_DISK, ManifoldKind.SPD2]


# -- dist ------------------------------------------------------------------

def test_disk_dist_examples():
    assert POINCARE_DISK.dist(0j, 0j) == 0.0
    assert POINCARE_DISK.dist(0j, 0.5 + 0j) == pytest.approx(np.log(3.0), abs=1e-12)


def test_spd_dist_example():
    assert SPD2.dist(np.eye(2), np.diag([E**2, 1.0])) == pytest.approx(2.0, abs=1e-12)


def test_disk_dist_matches_textbook_formula(rng):
    y, z = random_disk(rng, 200), random_disk(rng, 200)
    np.testing.assert_allclose(POINCARE_DISK.dist(y, z), disk_dist(y, z), rtol=1e-10, atol=1e-12)


def test_spd_dist_matches_eigen_formula(rng):
    y, z = random_spd(rng, 100), random_spd(rng, 100)
    ref = []
    for a, b in zip(y, z):
        w, V = np.linalg.eigh(a)
        isq = V @ np.diag(w**-0.5) @ V.T
        ref.append(np.sqrt(np.sum(np.log(np.linalg.eigvalsh(isq @ b @ isq)) ** 2)))
    np.testing.assert_allclose(SPD2.dist(y, z), ref, rtol=1e-9, atol=1e-12)


@pytest.mark.parametrize("kind", KINDS)
def test_dist_symmetric_and_zero_on_diagonal(kind, rng):
    m = get_manifold(kind)
    y, z = random_points(kind, rng, 300), random_points(kind, rng, 300)
    np.testing.assert_allclose(m.dist(y, z), m.dist(z, y), rtol=1e-12, atol=1e-12)
    assert np.all(m.dist(y, y) == 0.0)


@pytest.mark.parametrize("kind", KINDS)
def test_triangle_inequality(kind, rng):
    m = get_manifold(kind)
    x, y, z = (random_points(kind, rng, 1000) for _ in range(3))
    assert np.all(m.dist(x, z) <= m.dist(x, y) + m.dist(y, z) + 1e-10)


def test_disk_rotation_invariance(rng):
    y, z = random_disk(rng, 200), random_disk(rng, 200)
    rot = np.exp(1j * rng.uniform(0, 2 * np.pi))
    np.testing.assert_allclose(POINCARE_DISK.dist(rot * y, rot * z), POINCARE_DISK.dist(y, z), rtol=1e-10)


def test_disk_mobius_invariance(rng):
    y, z = random_disk(rng, 200, 0.7), random_disk(rng, 200, 0.7)
    a = 0.3 - 0.4j
    np.testing.assert_allclose(
        POINCARE_DISK.dist(POINCARE_DISK.mobius(a, y), POINCARE_DISK.mobius(a, z)),
        POINCARE_DISK.dist(y, z), rtol=1e-9)


def test_spd_congruence_invariance(rng):
    y, z = random_spd(rng, 100), random_spd(rng, 100)
    for k in range(100):
        g = rng.normal(size=(2, 2)) + 2 * np.eye(2)
        assert SPD2.dist(g @ y[k] @ g.T, g @ z[k] @ g.T) == pytest.approx(SPD2.dist(y[k], z[k]), rel=1e-9, abs=1e-12)


def test_kind_mismatch_and_invalid_points():
    with pytest.raises(GeometryError):
        POINCARE_DISK.validate(np.array([1.2 + 0j]))
    with pytest.raises(GeometryError):
        SPD2.validate(np.array([[1.0, 2.0], [2.0, 1.0]]))
    with pytest.raises(GeometryError):
        SPD2.validate(np.array([[1.0, 0.5], [0.0, 1.0]]))


def test_validation_projects_within_slack():
    y = POINCARE_DISK.validate(np.array([1.0 + 0j]))
    assert abs(y[0]) < 1.0
    s = SPD2.validate(np.array([[2.0, 0.3], [0.3 + 1e-14, 1.0]]))
    assert s[0, 1] == s[1, 0]


def test_coordinate_round_trip(rng):
    for kind in KINDS:
        m = get_manifold(kind)
        y = random_points(kind, rng, 50)
        np.testing.assert_array_equal(m.from_coords(m.to_coords(y)), y)


# -- exp / log ---------------------------------------------------------------

def test_exp_log_examples():
    np.testing.assert_allclose(SPD2.exp(np.eye(2), np.eye(2)), np.diag([E, E]), rtol=1e-14)
    np.testing.assert_allclose(SPD2.log(np.eye(2), np.diag([E, 1.0])), np.diag([1.0, 0.0]), atol=1e-14)
    y = 0.3 + 0.2j
    assert POINCARE_DISK.exp(y, 0j) == y
    assert POINCARE_DISK.log(y, y) == 0
    s = np.array([[2.0, 0.5], [0.5, 1.0]])
    np.testing.assert_allclose(SPD2.exp(s, np.zeros((2, 2))), s, rtol=1e-15)
    np.testing.assert_allclose(SPD2.log(s, s), 0.0, atol=1e-14)


@pytest.mark.parametrize("kind", KINDS)
def test_exp_log_round_trip_within_distance_3(kind, rng):
    m = get_manifold(kind)
    base = random_points(kind, rng, 400)
    z = random_points(kind, rng, 400)
    d = m.dist(base, z)
    keep = d <= 3.0
    assert keep.sum() > 50
    b, z = base[keep], z[keep]
    back = m.exp(b, m.log(b, z))
    assert np.max(m.dist(back, z)) <= 1e-9
    np.testing.assert_allclose(m.norm(b, m.log(b, z)), m.dist(b, z), rtol=1e-9, atol=1e-12)


@pytest.mark.parametrize("kind", KINDS)
def test_dist_to_exp_equals_tangent_norm(kind, rng):
    m = get_manifold(kind)
    base = random_points(kind, rng, 200)
    if kind is ManifoldKind.POINCARE_DISK:
        v = (rng.normal(size=200) + 1j * rng.normal(size=200)) * (1 - np.abs(base) ** 2) * 0.5
    else:
        # v = b^(1/2) S b^(1/2) for a symmetric S of moderate size
        root = sym_expm(0.5 * sym_logm(base))
        S = sym_logm(random_spd(rng, 200, 0.5))
        v = root @ S @ root
    np.testing.assert_allclose(m.dist(base, m.exp(base, v)), m.norm(base, v), rtol=1e-9)


def test_sym_logm_expm_inverse(rng):
    s = random_spd(rng, 100, 2.0)
    np.testing.assert_allclose(sym_expm(sym_logm(s)), s, rtol=1e-11)


unit = st.floats(-0.95, 0.95, allow_nan=False)


@settings(max_examples=200, deadline=None)
@given(unit, unit, unit, unit)
def test_disk_round_trip_property(a, b, c, d):
    y, z = complex(a, b), complex(c, d)
    if abs(y) >= 0.95 or abs(z) >= 0.95 or POINCARE_DISK.dist(y, z) > 3:
        return
    assert POINCARE_DISK.dist(POINCARE_DISK.exp(y, POINCARE_DISK.log(y, z)), z) <= 1e-9


logs = st.floats(-1.5, 1.5, allow_nan=False)


@settings(max_examples=200, deadline=None)
@given(logs, logs, logs, logs, logs, logs)
def test_spd_round_trip_property(a, b, c, d, e, f):
    y = sym_expm(np.array([[a, b], [b, c]]))
    z = sym_expm(np.array([[d, e], [e, f]]))
    assert SPD2.dist(SPD2.exp(y, SPD2.log(y, z)), z) <= 1e-9


# -- Karcher mean ------------------------------------------------------------

def test_karcher_mean_trivial_cases():
    y = np.array([0.2 + 0.1j])
    assert POINCARE_DISK.karcher_mean(y) == y[0]
    yy = np.array([0.2 + 0.1j, 0.2 + 0.1j])
    assert abs(POINCARE_DISK.karcher_mean(yy, [0.5, 0.5]) - yy[0]) < 1e-15


def test_karcher_mean_commuting_spd():
    pts = np.stack([np.eye(2), np.diag([E**2, E**2])])
    np.testing.assert_allclose(SPD2.karcher_mean(pts, [0.5, 0.5]), np.diag([E, E]), rtol=1e-12)


@pytest.mark.parametrize("kind", KINDS)
def test_karcher_mean_gradient_vanishes(kind, rng):
    m = get_manifold(kind)
    pts = random_points(kind, rng, 40)
    w = rng.random(40)
    w /= w.sum()
    mean = m.karcher_mean(pts, w)
    assert m.norm(mean, m.weighted_log(mean, pts, w)) <= 1e-9


@pytest.mark.parametrize("kind", KINDS)
def test_two_point_mean_on_geodesic(kind, rng):
    m = get_manifold(kind)
    for _ in range(20):
        y, z = random_points(kind, rng, 2)
        mid = m.karcher_mean(np.stack([y, z]), [0.5, 0.5])
        assert m.dist(y, mid) + m.dist(mid, z) == pytest.approx(m.dist(y, z), abs=1e-8)
        assert m.dist(y, mid) == pytest.approx(m.dist(mid, z), abs=1e-8)


def test_karcher_mean_rejects_empty_and_bad_weights():
    with pytest.raises(GeometryError):
        POINCARE_DISK.karcher_mean(np.array([], dtype=complex))
    with pytest.raises(ValueError):
        POINCARE_DISK.karcher_mean(np.array([0j, 0.1j]), [-1.0, 2.0])


def test_spd_outputs_exactly_symmetric():
    rng = np.random.default_rng(21)
    base = np.array([[2.0, 0.3], [0.3, 0.5]])
    y = RiemannianGaussian("Spd2", base, 0.4).sample(500, rng)
    np.testing.assert_array_equal(y, np.swapaxes(y, -1, -2))
    v = 0.1 * rng.normal(size=(50, 2, 2))
    v = v + np.swapaxes(v, -1, -2)
    z = SPD2.exp(base, v)
    np.testing.assert_array_equal(z, np.swapaxes(z, -1, -2))
    w = SPD2.log(base, y[:50])
    np.testing.assert_array_equal(w, np.swapaxes(w, -1, -2))
