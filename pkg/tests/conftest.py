import numpy as np

from holdscan import Waveform


def make_waveform(flow, pressure, rate=100.0, t0=0.0, volume=None):
    """Waveform on a uniform grid starting at t0, channels from sequences."""
    flow = np.asarray(flow, dtype=np.float64)
    pressure = np.asarray(pressure, dtype=np.float64)
    t = t0 + np.arange(len(flow), dtype=np.float64) / rate
    return Waveform(t=t, flow=flow, pressure=pressure, sample_rate_hz=rate, volume=volume)
