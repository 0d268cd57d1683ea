import pytest

from roofkit.ir import Precision
from roofkit.roofline import DeviceRoofline, PowerMode


MAXN_KW = dict(peak_flops=14.7e12, peak_bw=164.4e9, eps_flop=3.86e-12,
               eps_mop=141.38e-12, static_power=17.9)


@pytest.fixture(scope="session")
def maxn() -> DeviceRoofline:
    return DeviceRoofline(precision=Precision.FP32, device="agx-orin",
                          mode=PowerMode(12, 2200, 1300, 3200), **MAXN_KW)


@pytest.fixture(scope="session")
def maxn_fp16() -> DeviceRoofline:
    return DeviceRoofline(peak_flops=33.0e12, peak_bw=159.7e9, eps_flop=3.86e-12,
                          eps_mop=141.38e-12, static_power=17.9,
                          precision=Precision.FP16, device="agx-orin",
                          mode=PowerMode(12, 2200, 1300, 3200))
