"""Figure scripts for frozen-Gaussian wavepacket dynamics runs.

Renders static vector figures from the engine's frames CSVs and run
manifest.  This layer never recomputes dynamics: potential-curve overlays
are evaluated from the manifest's model parameters only.
"""

__version__ = "0.1.0"
