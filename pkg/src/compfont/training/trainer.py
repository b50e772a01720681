"""One-step updates, the training loop, EMA and checkpoints."""
import copy
import json
import logging
import math
import time
from dataclasses import dataclass, fields
from pathlib import Path

import torch

from ..config import TrainConfig
from ..data import batches
from ..errors import ConfigMismatch, NonFiniteLoss
from ..model import ComponentClassifier, Discriminator, Generator, glyph_tensor
from ..scripts import ComponentSchema, get_schema
from .losses import component_ce, component_targets, d_adversarial, g_adversarial, loss_feature_matching, loss_l1

logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "compfont-checkpoint"
CHECKPOINT_VERSION = 1


@dataclass
class LossReport:
    step: int
    d_font: float = None
    d_char: float = None
    adv_font: float = None
    adv_char: float = None
    l1: float = None
    feat: float = None
    cls_real: float = None
    cls_fake: float = None

    def as_dict(self):
        """Loss values only; ablated terms are left out."""
        return {f.name: getattr(self, f.name) for f in fields(self)
                if f.name != "step" and getattr(self, f.name) is not None}


@dataclass
class StepInputs:
    targets: torch.Tensor
    chars: list
    styles: list
    font_index: torch.Tensor
    char_index: torch.Tensor
    labels: torch.Tensor
    refs: torch.Tensor
    ref_chars: list
    ref_owner: list


@torch.no_grad()
def update_ema(ema, model, decay):
    for pe, p in zip(ema.parameters(), model.parameters()):
        pe.mul_(decay).add_(p, alpha=1.0 - decay)
    for be, b in zip(ema.buffers(), model.buffers()):
        be.copy_(b)


class Trainer:
    """Owns every network and optimizer of a run."""

    def __init__(self, config, schema, fonts, chars, device="cpu"):
        self.config = config
        self.schema = schema
        self.fonts = list(fonts)
        self.chars = list(chars)
        self.device = torch.device(device)
        torch.manual_seed(config.seed)
        cfg = config.model
        self.generator = Generator(schema, cfg, config.ablation, config.dm_policy).to(self.device)
        self.discriminator = Discriminator(len(self.fonts), len(self.chars), cfg).to(self.device)
        self.classifier = ComponentClassifier(schema, cfg.high_channels).to(self.device)
        self.ema = copy.deepcopy(self.generator).eval()
        self.ema.requires_grad_(False)
        betas = tuple(config.betas)
        self.opt_g = torch.optim.Adam(self.generator.parameters(), config.lr_g, betas)
        self.opt_d = torch.optim.Adam(self.discriminator.parameters(), config.lr_d, betas)
        # the classifier runs at the generator's rate with its own optimizer state
        self.opt_c = torch.optim.Adam(self.classifier.parameters(), config.lr_g, betas)
        self.step = 0

    # -- inputs ------------------------------------------------------------------

    def prepare(self, batch):
        ref = next(self.generator.parameters())
        refs, ref_chars, owner = [], [], []
        for b, rs in enumerate(batch.references):
            for g in rs:
                refs.append(g)
                ref_chars.append(g.char)
                owner.append(b)
        chars = [t.char for t in batch.targets]
        return StepInputs(
            targets=glyph_tensor(batch.targets, ref),
            chars=chars,
            styles=[t.style for t in batch.targets],
            font_index=torch.as_tensor(batch.font_index, device=self.device),
            char_index=torch.as_tensor(batch.char_index, device=self.device),
            labels=component_targets(self.schema, chars, self.device),
            refs=glyph_tensor(refs, ref) if refs else None,
            ref_chars=ref_chars,
            ref_owner=owner,
        )

    # -- forward pieces ------------------------------------------------------------

    def fake_images(self, inp, generator=None):
        """Generate every target from its own core-subset dynamic memory."""
        g = generator or self.generator
        dms = [g.new_memory() for _ in inp.chars]
        if g.use_dm and inp.refs is not None:
            g.encode_reference([dms[o] for o in inp.ref_owner], inp.refs, inp.ref_chars,
                               [inp.styles[o] for o in inp.ref_owner])
        return g.generate(dms, inp.chars, inp.styles)

    def discriminator_terms(self, inp, fake):
        D, form = self.discriminator, self.config.adv_form
        real_font, real_char, _ = D(inp.targets, inp.font_index, inp.char_index)
        fake_font, fake_char, _ = D(fake.detach(), inp.font_index, inp.char_index)
        return {"d_font": d_adversarial(real_font, fake_font, form),
                "d_char": d_adversarial(real_char, fake_char, form)}

    def generator_terms(self, inp, fake):
        D, form, ab = self.discriminator, self.config.adv_form, self.config.ablation
        fake_font, fake_char, fake_feats = D(fake, inp.font_index, inp.char_index)
        terms = {"adv_font": g_adversarial(fake_font, form), "adv_char": g_adversarial(fake_char, form)}
        if ab.loss_l1:
            terms["l1"] = loss_l1(fake, inp.targets)
        if ab.loss_feat:
            with torch.no_grad():
                _, _, real_feats = D(inp.targets, inp.font_index, inp.char_index)
            terms["feat"] = loss_feature_matching(real_feats, fake_feats)
        if ab.loss_cls:
            enc, C = self.generator.encoder, self.classifier
            terms["cls_real"] = component_ce(C.type_logits(enc(inp.targets)["high"]), inp.labels)
            terms["cls_fake"] = component_ce(C.type_logits(enc(fake)["high"]), inp.labels)
        return terms

    def generator_total(self, terms):
        c = self.config
        total = terms["adv_font"] + terms["adv_char"]
        if "l1" in terms:
            total = total + c.lambda_l1 * terms["l1"]
        if "feat" in terms:
            total = total + c.lambda_feat * terms["feat"]
        if "cls_real" in terms:
            total = total + c.lambda_cls * (terms["cls_real"] + terms["cls_fake"])
        return total

    @staticmethod
    def _check_finite(terms):
        for name, value in terms.items():
            v = float(value.detach())
            if not math.isfinite(v):
                raise NonFiniteLoss(name, v)

    # -- update --------------------------------------------------------------------

    def train_step(self, batch):
        """One discriminator update followed by one generator + classifier update."""
        for m in (self.generator, self.discriminator, self.classifier):
            m.train()
        inp = self.prepare(batch)
        fake = self.fake_images(inp)

        d_terms = self.discriminator_terms(inp, fake)
        self._check_finite(d_terms)
        self.opt_d.zero_grad(set_to_none=True)
        (d_terms["d_font"] + d_terms["d_char"]).backward()
        self.opt_d.step()
        self.discriminator.refresh_spectral_norm()

        g_terms = self.generator_terms(inp, fake)
        self._check_finite(g_terms)
        self.opt_g.zero_grad(set_to_none=True)
        self.opt_c.zero_grad(set_to_none=True)
        self.generator_total(g_terms).backward()
        self.opt_g.step()
        self.opt_c.step()
        self.discriminator.zero_grad(set_to_none=True)

        update_ema(self.ema, self.generator, self.config.ema_decay)
        self.step += 1
        values = {k: float(v.detach()) for k, v in {**d_terms, **g_terms}.items()}
        return LossReport(step=self.step, **values)

    @torch.no_grad()
    def component_accuracy(self, glyphs):
        """Fraction of (glyph, type) pairs whose component the classifier gets right."""
        glyphs = list(glyphs)
        modes = (self.generator.training, self.classifier.training)
        self.generator.eval()
        self.classifier.eval()
        try:
            correct = 0
            for i in range(0, len(glyphs), 64):
                chunk = glyphs[i:i + 64]
                x = glyph_tensor(chunk, next(self.generator.parameters()))
                labels = component_targets(self.schema, [g.char for g in chunk], self.device)
                logits = self.classifier.type_logits(self.generator.encoder(x)["high"])
                correct += sum(int((lg.argmax(1) == labels[:, t]).sum()) for t, lg in enumerate(logits))
        finally:
            self.generator.train(modes[0])
            self.classifier.train(modes[1])
        return correct / (len(glyphs) * self.schema.num_types)

    # -- state ---------------------------------------------------------------------

    def state_dict(self):
        return {
            "step": self.step,
            "generator": self.generator.state_dict(),
            "ema": self.ema.state_dict(),
            "discriminator": self.discriminator.state_dict(),
            "classifier": self.classifier.state_dict(),
            "opt_g": self.opt_g.state_dict(),
            "opt_d": self.opt_d.state_dict(),
            "opt_c": self.opt_c.state_dict(),
            "torch_rng": torch.get_rng_state(),
        }

    def load_state_dict(self, state):
        self.step = state["step"]
        self.generator.load_state_dict(state["generator"])
        self.ema.load_state_dict(state["ema"])
        self.discriminator.load_state_dict(state["discriminator"])
        self.classifier.load_state_dict(state["classifier"])
        self.opt_g.load_state_dict(state["opt_g"])
        self.opt_d.load_state_dict(state["opt_d"])
        self.opt_c.load_state_dict(state["opt_c"])
        torch.set_rng_state(state["torch_rng"])

    def save(self, path):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        payload = {
            "format": CHECKPOINT_FORMAT,
            "version": CHECKPOINT_VERSION,
            "schema_id": self.schema.script_id,
            "schema": self.schema.to_dict(),
            "config": self.config.to_dict(),
            "fonts": self.fonts,
            "chars": self.chars,
            **self.state_dict(),
        }
        tmp = path.with_suffix(path.suffix + ".tmp")
        torch.save(payload, tmp)
        tmp.replace(path)
        return path

    @classmethod
    def from_checkpoint(cls, path, device="cpu"):
        ck = load_checkpoint(path)
        trainer = cls(TrainConfig.from_dict(ck["config"]), _schema_of(ck), ck["fonts"], ck["chars"], device)
        trainer.load_state_dict(ck)
        return trainer


def _schema_of(ck):
    return ComponentSchema.from_dict(ck["schema"]) if "schema" in ck else get_schema(ck["schema_id"])


def load_checkpoint(path):
    ck = torch.load(path, map_location="cpu", weights_only=False)
    if ck.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"{path} is not a generator checkpoint")
    if ck.get("version", 0) > CHECKPOINT_VERSION:
        raise ValueError(f"checkpoint version {ck['version']} is newer than supported")
    return ck


def load_generator(path, use_ema=True, device="cpu"):
    """Rebuild the (EMA by default) generator from a checkpoint, in eval mode."""
    ck = load_checkpoint(path)
    config = TrainConfig.from_dict(ck["config"])
    schema = _schema_of(ck)
    g = Generator(schema, config.model, config.ablation, config.dm_policy)
    g.load_state_dict(ck["ema" if use_ema else "generator"])
    return g.to(device).eval(), schema, config


def _lrs(trainer):
    return {"g": trainer.opt_g.param_groups[0]["lr"], "d": trainer.opt_d.param_groups[0]["lr"],
            "c": trainer.opt_c.param_groups[0]["lr"]}


def _emit_samples(trainer, batch, out_dir):
    from ..eval.sheet import write_grid

    with torch.no_grad():
        inp = trainer.prepare(batch)
        fake = trainer.fake_images(inp, trainer.ema)
    rows = [list(fake[:, 0].cpu().numpy()), list(inp.targets[:, 0].cpu().numpy())]
    write_grid(rows, Path(out_dir) / f"step_{trainer.step:07d}.png")


def train(dataset, split, config, checkpoint_dir, resume=True, on_step=None, device="cpu"):
    """Run (or resume) training until ``config.iterations``; return the last checkpoint path."""
    checkpoint_dir = Path(checkpoint_dir)
    checkpoint_dir.mkdir(parents=True, exist_ok=True)
    last = checkpoint_dir / "last.pt"
    trainer = Trainer(config, dataset.schema, split.train_fonts, split.seen_chars, device)
    if resume and last.exists():
        ck = load_checkpoint(last)
        if TrainConfig.from_dict(ck["config"]).comparable() != config.comparable():
            raise ConfigMismatch(f"{last} was written with a different configuration")
        if list(ck["fonts"]) != list(split.train_fonts) or list(ck["chars"]) != list(split.seen_chars):
            raise ConfigMismatch(f"{last} was written for a different split")
        trainer.load_state_dict(ck)
        logger.info("resumed from %s at step %d", last, trainer.step)
    else:
        config.save(checkpoint_dir / "config.yaml")
        trainer.save(last)

    stream = batches(dataset, split, config.batch_size, config.seed, dataset.schema, start=trainer.step)
    with open(checkpoint_dir / "log.jsonl", "a", encoding="utf-8") as log:
        while trainer.step < config.iterations:
            batch = next(stream)
            report = trainer.train_step(batch)
            if on_step is not None:
                on_step(report)
            if config.log_every and trainer.step % config.log_every == 0:
                log.write(json.dumps({"step": trainer.step, "losses": report.as_dict(),
                                      "lr": _lrs(trainer), "timestamp": time.time()}) + "\n")
                log.flush()
            if config.sample_every and trainer.step % config.sample_every == 0:
                _emit_samples(trainer, batch, checkpoint_dir / "samples")
            if config.checkpoint_every and trainer.step % config.checkpoint_every == 0:
                trainer.save(last)
                trainer.save(checkpoint_dir / f"step_{trainer.step:07d}.pt")
    trainer.save(last)
    return last
