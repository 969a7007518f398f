from .audio_net import AudioForward, AudioNet, AudioNetConfig
from .blocks import ResidualSEBlock, SpatialChannelSE
from .fusion import (AVForward, AVModel, PredictionBundle, audio_to_sequence)
from .layers import BatchNorm, BiGRU, Conv2D, Dense, GRU, Module
from .visual_net import (Backbone, FrameSequence, TinyBackbone, VGG16Backbone,
                         VisualForward, VisualNet, load_vgg16_backbone,
                         normalize_frames)

__all__ = [
    "AudioNet", "AudioNetConfig", "AudioForward",
    "ResidualSEBlock", "SpatialChannelSE",
    "AVModel", "AVForward", "PredictionBundle", "audio_to_sequence",
    "Module", "Dense", "Conv2D", "BatchNorm", "GRU", "BiGRU",
    "Backbone", "TinyBackbone", "VGG16Backbone", "VisualNet", "VisualForward",
    "FrameSequence", "normalize_frames", "load_vgg16_backbone",
]
