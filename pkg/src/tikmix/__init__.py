"""Joint LDPC decoding and Wiener phase-noise tracking with Tikhonov-mixture messages."""

__version__ = "0.1.0"

from .channel import FrameConfig, ReceivedBlock
from .dirstat import (TikhonovComponent, WrappedGaussianStep, bessel_ratio, cmvm, convolve_wrapped_gaussian,
                      inverse_bessel_ratio, log_bessel_i0, tikhonov_kl, tikhonov_product, wrapped_gaussian_pdf)
from .ldpc import LdpcCode, load_alist, write_alist
from .mixture import ReductionConfig, TikhonovMixture
from .phase_spa import DetectorConfig, joint_decode
