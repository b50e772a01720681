"""Loss terms of the adversarial objective."""
import torch
import torch.nn.functional as F


def loss_adversarial(real_logits, fake_logits, form="hinge"):
    """Return ``(d_loss, g_loss)`` for one conditional realness head.

    ``hinge``: d = E[max(0, 1 - D(real))] + E[max(0, 1 + D(fake))], g = -E[D(fake)].
    ``log``: d = -E[log D(real)] - E[log(1 - D(fake))] with D = sigmoid(logit) and
    the generator minimizing E[log(1 - D(fake))].
    """
    if form == "hinge":
        d = F.relu(1.0 - real_logits).mean() + F.relu(1.0 + fake_logits).mean()
        g = -fake_logits.mean()
    elif form == "log":
        # log(sigmoid(x)) and log(1 - sigmoid(x)) = logsigmoid(-x), computed without overflow
        d = -F.logsigmoid(real_logits).mean() - F.logsigmoid(-fake_logits).mean()
        g = F.logsigmoid(-fake_logits).mean()
    else:
        raise ValueError(f"unknown adversarial form {form!r}")
    return d, g


def d_adversarial(real_logits, fake_logits, form="hinge"):
    return loss_adversarial(real_logits, fake_logits, form)[0]


def g_adversarial(fake_logits, form="hinge"):
    if form == "hinge":
        return -fake_logits.mean()
    if form == "log":
        return F.logsigmoid(-fake_logits).mean()
    raise ValueError(f"unknown adversarial form {form!r}")


def loss_l1(generated, target):
    return (generated - target).abs().mean()


def loss_feature_matching(real_feats, fake_feats):
    """Mean over layers of the mean absolute feature difference."""
    if len(real_feats) != len(fake_feats):
        raise ValueError("feature lists differ in length")
    return sum((r - f).abs().mean() for r, f in zip(real_feats, fake_feats)) / len(real_feats)


def component_ce(type_logits, labels):
    """Sum over component types of cross-entropy, averaged over the batch.

    ``type_logits`` holds one (B, N_i) tensor per type; ``labels`` is a
    (B, T) LongTensor of component indices.
    """
    return sum(F.cross_entropy(logits, labels[:, i]) for i, logits in enumerate(type_logits))


def loss_component_cls(real_logits, fake_logits, labels):
    """Classification loss on encoded real glyphs plus re-encoded generated glyphs."""
    return component_ce(real_logits, labels) + component_ce(fake_logits, labels)


def component_targets(schema, chars, device=None):
    return torch.tensor([[l.component_index for l in schema.decompose(c)] for c in chars],
                        dtype=torch.long, device=device)
