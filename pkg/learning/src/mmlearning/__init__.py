"""Learning stage for the mmWave imaging toolkit.

A conditional GAN maps 128x128x32 MUSIC spectrum tensors to 256x256 depth
images (GAN + weighted-L1 + perceptual + SSIM objective), and a small CNN
classifies the reconstructed image into a person identity. The package
consumes the imaging front-end only through its tensor-container files.
"""

__version__ = "0.1.0"

from .classifier import (
    ClassifierConfig,
    IdentityClassifier,
    classifier_lr,
    classify,
    confusion_matrix,
    train_classifier,
)
from .container import ContainerError, read_tensor, write_tensor
from .data import PairedSamples, load_pairs, stratified_split
from .discriminator import DiscriminatorSpec, TwoStreamDiscriminator
from .generator import GeneratorSpec, SpectrumGenerator
from .losses import (
    LossWeights,
    PerceptualLoss,
    TrainingDivergence,
    discriminator_gan_loss,
    final_loss,
    generator_gan_loss,
    grid_search,
    ssim_loss,
    weighted_l1,
)
from .ssim import ssim
from .train_gan import ABLATION_COMBOS, TrainConfig, lr_factor, run_ablation, train_cgan
