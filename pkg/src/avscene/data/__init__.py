from .loader import AlignedExample, ExampleError, load_frame_pixels, read_audio_10s, read_example
from .manifest import (CLASSES, CLASS_INDEX, FRAMES_PER_CLIP, ManifestEntry,
                       ManifestError, by_split, load_manifest, split_report,
                       write_manifest)
from .synthetic import SyntheticSpec, generate_synthetic, separability_self_test

__all__ = [
    "CLASSES", "CLASS_INDEX", "FRAMES_PER_CLIP",
    "ManifestEntry", "ManifestError", "load_manifest", "split_report",
    "by_split", "write_manifest",
    "AlignedExample", "ExampleError", "read_example", "read_audio_10s",
    "load_frame_pixels",
    "SyntheticSpec", "generate_synthetic", "separability_self_test",
]
