from .adam import Adam
from .config import TrainConfig
from .densify import densify_and_prune
from .losses import image_loss, loss, scene_regularizers, ssim

__all__ = ["Adam", "TrainConfig", "densify_and_prune", "image_loss", "loss",
           "scene_regularizers", "ssim"]
