from .losses import (component_ce, loss_adversarial, loss_component_cls, loss_feature_matching,
                     loss_l1)
from .trainer import (LossReport, Trainer, load_checkpoint, load_generator, train, update_ema)

__all__ = ["LossReport", "Trainer", "component_ce", "load_checkpoint", "load_generator",
           "loss_adversarial", "loss_component_cls", "loss_feature_matching", "loss_l1", "train",
           "update_ema"]
