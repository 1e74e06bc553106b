"""Wavelet-domain augmentation for time-series forecasting with DLinear.

Everything runs on numpy: the Daubechies DWT, the FFT used by the
frequency-domain baselines, the DLinear model with hand-written gradients
and the experiment harness.
"""

from waveaug.augment import (
    AugmentationPolicy,
    augment_training_batch,
    create_random_mask,
    freq_mask,
    freq_mix,
    wave_mask,
    wave_mix,
)
from waveaug.data import Dataset, ForecastTask, Normalizer, load_csv, make_windows, split_622, synthetic_seasonal
from waveaug.dwt import FilterBank, WaveletCoeffs, filter_bank, max_level, wavedec, waverec
from waveaug.model import DLinearParams, TrainConfig, dlinear_backward, dlinear_forward, init_params, train
from waveaug.spectral import Spectrum, irfft, rfft

__version__ = "0.1.0"

__all__ = [
    "AugmentationPolicy", "augment_training_batch", "create_random_mask",
    "freq_mask", "freq_mix", "wave_mask", "wave_mix",
    "Dataset", "ForecastTask", "Normalizer", "load_csv", "make_windows", "split_622", "synthetic_seasonal",
    "FilterBank", "WaveletCoeffs", "filter_bank", "max_level", "wavedec", "waverec",
    "DLinearParams", "TrainConfig", "dlinear_backward", "dlinear_forward", "init_params", "train",
    "Spectrum", "irfft", "rfft",
]
