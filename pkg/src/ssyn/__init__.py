"""ssyn: silent-video sound synthesis.

A 3D vector-quantized video autoencoder paired with a fully connected audio
decoder, built on a small reverse-mode autodiff engine with uncompressed
media I/O (Y4M, WAV, RVID).
"""

__version__ = "0.1.0"
