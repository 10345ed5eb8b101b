"""Complex baseband sample buffers."""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class SampleBuffer:
    """A complex I/Q envelope sequence in volts at a fixed sample rate."""

    samples: np.ndarray
    sample_rate: float = 1.0

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.complex128)
        object.__setattr__(self, "samples", samples)
        if samples.ndim != 1:
            raise DomainError("sample buffer must be one-dimensional")
        if not np.all(np.isfinite(samples.view(np.float64))):
            raise DomainError("sample buffer contains non-finite values")
        if not (self.sample_rate > 0):
            raise DomainError(f"sample_rate must be positive, got {self.sample_rate}")

    def __len__(self):
        return self.samples.size

    @property
    def mean_power(self):
        """Mean envelope power in watts (1-ohm convention)."""
        if self.samples.size == 0:
            return 0.0
        return float(np.mean(np.abs(self.samples) ** 2))

    def scaled(self, factor):
        return SampleBuffer(self.samples * factor, self.sample_rate)
