"""beamcam: co-simulator for camera-assisted mmWave beam selection.

Generates frame-synchronized visual truth (bounding boxes) and wireless
truth (ray-traced paths, per-beam SNR, optimal beam labels) from a plain
text scenario, runs the camera-to-beam prediction loop, and evaluates it.
"""

__version__ = "0.1.0"
