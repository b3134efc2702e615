"""EEG nap-and-memory analysis toolkit.

Preprocessing, band-limited spectral power, weighted phase lag index
connectivity, memory task scoring, and a nonparametric statistical
battery, with synthetic generators providing ground truth for all of it.
"""

__version__ = "0.1.0"
