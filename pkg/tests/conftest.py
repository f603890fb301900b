import numpy as np
import pytest

import sigstrength as st


@pytest.fixture
def sine_trace():
    """1 kHz sine, 1 s at 100 kHz, exact-bin frequency."""
    return st.synthesize(st.ToneSpec("sine", f_m=1000.0), 100e3, 1.0)


def make_tone(f, f_s, duration, amplitude=1.0, phase=0.0):
    t = np.arange(int(round(duration * f_s))) / f_s
    return st.Trace(amplitude * np.sin(2 * np.pi * f * t + phase), f_s)
