"""Shared fixtures.

Two parameter sets cover most tests: the shipped operating point (slow
to integrate, used sparingly) and a scaled-down device with the same
structure but a small anharmonicity-to-coupling ratio, which keeps
step counts tiny.
"""

import math

import pytest

from darklink.config import load_preset
from darklink.model import DeviceParams

TWO_PI = 2.0 * math.pi


@pytest.fixture(scope="session")
def sec4_config():
    return load_preset("paper_sec4")


@pytest.fixture(scope="session")
def sec4_params(sec4_config):
    return sec4_config.device_params()


@pytest.fixture(scope="session")
def lossless_params():
    return load_preset("paper_sec3_fig3").device_params()


def make_cheap_params(g1_hz=100.0, ratio_alpha=9.0, ratio_line=3.0,
                      lifetime_s=math.inf):
    """A structurally identical device at audio-range frequencies.

    The anharmonicity is ratio_alpha * g1 instead of 90 * g1, so default
    steps stay large and propagations finish in milliseconds.
    """
    omega = TWO_PI * 1.0e4
    g1 = TWO_PI * g1_hz
    alpha = ratio_alpha * g1
    gf = ratio_line * g1
    rate = 0.0 if math.isinf(lifetime_s) else 1.0 / lifetime_s
    g2_es = g1 * math.sqrt(3.0)
    return DeviceParams(
        omega_a=omega, omega_b=omega, omega_f=omega,
        omega1_ge=omega, omega1_es=omega - alpha,
        omega2_ge=omega + alpha, omega2_es=omega,
        g1_ge=g1, g2_ge=g2_es / math.sqrt(2.0),
        gf_a=gf, gf_b=gf,
        kappa_a=rate, kappa_b=rate, kappa_f=rate,
        gamma1_ge=rate, gamma2_ge=rate,
    )


@pytest.fixture(scope="session")
def cheap_params():
    return make_cheap_params()


@pytest.fixture(scope="session")
def cheap_lossy_params():
    # lifetimes around a hundred gate times: visible loss, stable gate
    return make_cheap_params(lifetime_s=1.0)


@pytest.fixture(scope="session")
def unit_params():
    """Order-one frequencies for algebraic identities, where absolute
    float tolerances in the 1e-10 range are meaningful."""
    return DeviceParams(
        omega_a=1.0, omega_b=1.0, omega_f=1.0,
        omega1_ge=1.0, omega1_es=0.85,
        omega2_ge=1.15, omega2_es=1.0,
        g1_ge=0.01, g2_ge=0.01 * math.sqrt(1.5),
        gf_a=0.25, gf_b=0.25,
    )
