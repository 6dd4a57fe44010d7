import numpy as np
import pytest

from srshift.resample import dft_resample, trim_for_ratio


def sine(freq_cycles_per_sample, n, phase=0.3):
    return np.sin(2 * np.pi * freq_cycles_per_sample * np.arange(n) + phase)


def test_identity_ratio():
    rng = np.random.default_rng(1)
    x = rng.normal(size=1024)
    assert np.max(np.abs(dft_resample(x, 1, 1) - x)) <= 1e-12


def test_trim():
    assert len(trim_for_ratio(np.zeros(1001), 160)) == 960


def test_rejects_untrimmed():
    with pytest.raises(ValueError):
        dft_resample(np.zeros(1001), 147, 160)


def test_rejects_short_and_bad_ratio():
    with pytest.raises(ValueError):
        dft_resample(np.zeros(1), 2, 1)
    with pytest.raises(ValueError):
        dft_resample(np.zeros(16), 0, 1)


@pytest.mark.parametrize("p,q", [(160, 147), (147, 160)])
def test_sinusoid_oracle(p, q):
    # bin-aligned tone well below both Nyquists; compare against the
    # analytic sinusoid at the converted rate, edges excluded
    n = 147 * 160
    cycles = 300                       # aligned in both input and output DFTs
    x = sine(cycles / n, n)
    y = dft_resample(x, p, q)
    m = len(y)
    assert m == n * p // q
    want = np.sin(2 * np.pi * cycles / m * np.arange(m) + 0.3)
    core = slice(m // 10, -m // 10)
    err = y[core] - want[core]
    snr_db = 10 * np.log10(np.sum(want[core] ** 2) / np.sum(err ** 2))
    assert snr_db >= 120
    assert np.max(np.abs(err)) <= 1e-9


def test_downsample_truncates_spectrum():
    rng = np.random.default_rng(2)
    x = rng.normal(size=160 * 64)
    y = dft_resample(x, 147, 160)
    spec = np.fft.rfft(y)
    # nothing above the new Nyquist by construction; top retained bin is the
    # realified old bin
    assert spec.size == len(y) // 2 + 1
    assert abs(spec[-1].imag) <= 1e-9


def test_round_trip():
    rng = np.random.default_rng(3)
    n = 147 * 160
    # band-limit: keep only the low third of the spectrum
    spec = np.fft.rfft(rng.normal(size=n))
    spec[n // 6:] = 0
    x = np.fft.irfft(spec, n=n)
    y = dft_resample(dft_resample(x, 160, 147), 147, 160)
    assert np.sqrt(np.mean((y - x) ** 2)) <= 1e-9


def test_energy_preserved_for_bandlimited():
    rng = np.random.default_rng(4)
    n = 160 * 32
    spec = np.fft.rfft(rng.normal(size=n))
    spec[n // 4:] = 0
    x = np.fft.irfft(spec, n=n)
    y = dft_resample(x, 147, 160)
    # Parseval with the M/N amplitude rescale: mean power is preserved
    assert np.mean(y ** 2) == pytest.approx(np.mean(x ** 2), rel=1e-9)


def test_output_exactly_real():
    rng = np.random.default_rng(5)
    x = rng.normal(size=147 * 8)
    y = dft_resample(x, 160, 147)
    assert np.isrealobj(y)
