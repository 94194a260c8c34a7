"""Special-function values against frozen 30-digit references."""

import numpy as np
import pytest

from helmuq import special

# (n, z, J_n(z), Y_n(z)) -- generated offline at 30 significant digits
CYL_REFERENCE = [
    (0, 0.1, 0.99750156206604003, -1.5342386513503668),
    (0, 1.0, 0.76519768655796655, 0.088256964215676958),
    (0, 4.5, -0.32054250898512142, -0.19470500862950453),
    (0, 12.0, 0.047689310796833537, -0.22523731263436143),
    (0, 17.5, -0.10311039822868592, -0.16041119250501117),
    (0, 25.0, 0.096266783275958116, -0.12724943226800614),
    (0, 60.0, -0.09147180408906187, 0.047358952209449399),
    (1, 0.1, 0.049937526036242, -6.4589510947020266),
    (1, 1.0, 0.44005058574493352, -0.78121282130028872),
    (1, 4.5, -0.23106043192337063, 0.30099732306965462),
    (1, 12.0, -0.22344710449062761, -0.057099218260896521),
    (1, 17.5, -0.16341996942575491, 0.098572798734216046),
    (1, 25.0, -0.1253502495802899, -0.09882996478323741),
    (1, 60.0, 0.046598383758166318, 0.091869609369866895),
    (2, 0.1, 0.001248958658799919, -127.64478324269016),
    (2, 1.0, 0.11490348493190048, -1.6506826068162544),
    (2, 4.5, 0.21784898368584559, 0.32848159666046214),
    (2, 12.0, -0.084930494878604805, 0.21572077625754535),
    (2, 25.0, -0.10629480324238131, 0.11934303508534715),
    (5, 1.0, 0.00024975773021123443, -260.40586662581222),
    (5, 4.5, 0.19471465863871367, -0.59631936513587589),
    (5, 12.0, -0.073470963101658581, -0.22981794662508243),
    (5, 25.0, -0.066007995398422993, -0.14705799311372266),
    (5, 60.0, 0.0274547442283441, 0.099464632840450886),
    (12, 1.0, 4.9997181794484053e-13, -53241143759.69245),
    (12, 4.5, 2.3675076000831779e-5, -1209.5994646507498),
    (12, 12.0, 0.19528018273883224, -0.33855826409567555),
    (12, 25.0, -0.072867827279862885, 0.15392729470126905),
    (12, 60.0, -0.077812256952445179, -0.069093286931009178),
]

# (n, z, j_n(z), y_n(z))
SPH_REFERENCE = [
    (0, 0.2, 0.99334665397530608, -4.9003328892062079),
    (0, 1.0, 0.84147098480789651, -0.54030230586813972),
    (0, 7.3, 0.11649816720939239, -0.072065413339877446),
    (0, 24.0, -0.037732431750275994, -0.017674125305708207),
    (1, 0.2, 0.066400380670322235, -25.495011100006344),
    (1, 1.0, 0.30116867893975679, -1.3817732906760362),
    (1, 7.3, -0.056106760297494926, -0.12637014163951259),
    (1, 24.0, -0.019246309961969707, 0.036996009862538152),
    (2, 1.0, 0.062035052011373861, -3.605017566159969),
    (2, 7.3, -0.13955573993439031, 0.020132478419529805),
    (6, 0.2, 4.7296937762338886e-10, -813587579.68906427),
    (6, 1.0, 7.1569363100870856e-6, -10880.945593099894),
    (6, 7.3, 0.1467225698923401, -0.113185620835284),
    (6, 24.0, 0.010634121486726769, 0.041107161669298384),
    (15, 7.3, 2.0300647091719939e-5, -247.01646734728193),
    (15, 24.0, -0.028953802589521542, -0.037806864822421159),
]

LEGENDRE_REFERENCE = [
    (3, -0.7, 0.1925000000000001),
    (3, 0.95, 0.71843749999999977),
    (10, 0.0, -0.24609375),
    (10, 0.3, 0.25147634951601563),
    (10, 0.95, -0.35488029484085534),
    (25, -0.7, -0.14961506606215227),
    (25, 0.3, 0.16120337851813778),
]


@pytest.mark.parametrize("n,z,jref,yref", CYL_REFERENCE)
def test_cylindrical_bessel(n, z, jref, yref):
    jn = special.bessel_jn_table(n, z)[n][0]
    yn = special.bessel_yn_table(n, z)[n][0]
    assert jn == pytest.approx(jref, rel=1e-10, abs=1e-14)
    assert yn == pytest.approx(yref, rel=1e-10)


def test_low_order_shortcuts():
    z = np.array([0.3, 2.2, 9.4, 21.0])
    jt = special.bessel_jn_table(1, z)
    yt = special.bessel_yn_table(1, z)
    assert np.allclose(special.bessel_j0(z), jt[0], rtol=1e-12)
    assert np.allclose(special.bessel_j1(z), jt[1], rtol=1e-12)
    assert np.allclose(special.bessel_y0(z), yt[0], rtol=1e-12)
    assert np.allclose(special.bessel_y1(z), yt[1], rtol=1e-12)
    h0 = special.hankel1_0(z)
    assert np.allclose(h0.real, jt[0]) and np.allclose(h0.imag, yt[0])


def test_bessel_wronskian():
    # J_{n+1} Y_n - J_n Y_{n+1} = 2/(pi z)
    z = np.linspace(0.05, 40.0, 311)
    j = special.bessel_jn_table(6, z)
    y = special.bessel_yn_table(6, z)
    for n in range(6):
        w = j[n + 1] * y[n] - j[n] * y[n + 1]
        assert np.allclose(w, 2.0 / (np.pi * z), rtol=5e-11)


@pytest.mark.parametrize("n,z,jref,yref", SPH_REFERENCE)
def test_spherical_bessel(n, z, jref, yref):
    jn = special.spherical_jn_table(n, z)[n][0]
    yn = special.spherical_yn_table(n, z)[n][0]
    assert jn == pytest.approx(jref, rel=1e-10, abs=1e-15)
    assert yn == pytest.approx(yref, rel=1e-10)


def test_spherical_wronskian():
    # j_n(z) y_n'(z) - j_n'(z) y_n(z) = 1/z^2
    z = np.linspace(0.1, 30.0, 173)
    j = special.spherical_jn_table(8, z)
    y = special.spherical_yn_table(8, z)
    jp = special.sph_derivative(j, z)
    yp = special.sph_derivative(y, z)
    for n in range(9):
        w = j[n] * yp[n] - jp[n] * y[n]
        assert np.allclose(w, 1.0 / z ** 2, rtol=5e-11)


def test_cyl_derivative_identity():
    # J_0' = -J_1 and the recurrence rows against finite differences
    z = np.linspace(0.5, 20.0, 41)
    j = special.bessel_jn_table(4, z)
    jp = special.cyl_derivative(j, z)
    assert np.allclose(jp[0], -j[1], rtol=1e-12)
    h = 1e-6
    jph = special.bessel_jn_table(4, z + h)
    jmh = special.bessel_jn_table(4, z - h)
    fd = (jph - jmh) / (2 * h)
    assert np.allclose(jp, fd, atol=1e-8)


@pytest.mark.parametrize("n,x,ref", LEGENDRE_REFERENCE)
def test_legendre(n, x, ref):
    assert special.legendre_table(n, x)[n][0] == pytest.approx(ref, rel=1e-13, abs=1e-14)


def test_gauss_legendre_01_exactness():
    x, w = special.gauss_legendre_01(6)
    for k in range(12):
        assert np.dot(w, x ** k) == pytest.approx(1.0 / (k + 1), rel=1e-13)


@pytest.mark.parametrize("n", [4, 8, 16])
def test_gauss_log_moments(n):
    # rule integrates x^k against -ln(x) exactly: value 1/(k+1)^2
    x, w = special.gauss_log_01(n)
    for k in range(2 * n):
        assert np.dot(w, x ** k) == pytest.approx(1.0 / (k + 1) ** 2, rel=1e-12)


def test_gauss_log_unknown_order():
    with pytest.raises(ValueError):
        special.gauss_log_01(5)


def test_bessel_argument_validation():
    with pytest.raises(ValueError):
        special.bessel_j0(-1.0)
    with pytest.raises(ValueError):
        special.spherical_jn_table(3, 0.0)
