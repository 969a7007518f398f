"""avscene: audio-visual scene classification at desk scale.

Two specialist subnetworks (a residual squeeze-excitation CNN over
gammatone/mel spectrograms, a time-distributed CNN + BiGRU over frames),
early and late fusion heads, a staged training pipeline, and the
evaluation/reporting surface, all on a small reverse-mode numpy engine.
"""

__version__ = "0.1.0"
