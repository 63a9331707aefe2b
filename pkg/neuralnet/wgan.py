"""
Wasserstein GAN training with weight clipping, and generator inference.

Iteration i trains the generator when i % cycle == cycle - 1 and the critic
otherwise (9 critic steps per generator step by default). Latent vectors live
in [0, 100]^2 and are mapped to [-1, 1]^2 before the first layer.
"""
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))
from config.settings import (
    CHECKPOINT_SUFFIX, GAN_BATCH_SIZE, GAN_CHECKPOINT_EVERY, GAN_CLIP, GAN_CYCLE,
    GAN_ITERATIONS, GAN_LATENT_DIM, GAN_LATENT_HIGH, GAN_LATENT_LOW, GAN_LEARNING_RATE,
)
from core.errors import ConfigError, DimensionError, DivergenceError, DomainError
from core.labeling import decode_one_hot, martensite_fraction
from neuralnet.checkpoint import save_checkpoint
from neuralnet.network import build_critic, build_generator
from neuralnet.optim import Adam

logger = logging.getLogger(__name__)

TRACE_COLUMNS = ["iteration", "loss", "phase"]


@dataclass(frozen=True)
class WganConfig:
    iterations: int = GAN_ITERATIONS
    batch_size: int = GAN_BATCH_SIZE
    cycle: int = GAN_CYCLE
    clip: float = GAN_CLIP
    learning_rate: float = GAN_LEARNING_RATE
    latent_dim: int = GAN_LATENT_DIM
    checkpoint_every: int = GAN_CHECKPOINT_EVERY
    log_every: int = 1000

    def __post_init__(self):
        if self.iterations < 1 or self.batch_size < 1:
            raise ConfigError("iterations and batch_size must be positive")
        if self.cycle < 2:
            raise ConfigError("cycle must be at least 2 (one generator step per cycle)")
        if not self.clip > 0:
            raise ConfigError("clip bound must be positive")


@dataclass
class WganResult:
    generator: object
    critic: object
    trace: pd.DataFrame
    generator_optimizer: Adam
    critic_optimizer: Adam


def critic_loss(real_scores, fake_scores):
    """Wasserstein estimate W = mean f(real) - mean f(fake)."""
    real = np.asarray(real_scores, dtype=float)
    fake = np.asarray(fake_scores, dtype=float)
    if real.size == 0 or fake.size == 0:
        raise ConfigError("critic_loss needs non-empty batches")
    return float(real.mean() - fake.mean())


def clip_weights(critic, bound=GAN_CLIP):
    if not bound > 0:
        raise ConfigError("clip bound must be positive")
    for value in critic.parameters().values():
        np.clip(value, -bound, bound, out=value)
    return critic


def rescale_latent(z):
    """[0, 100]^d -> [-1, 1]^d; raises DomainError outside the box."""
    z = np.atleast_2d(np.asarray(z, dtype=float))
    if np.any(z < GAN_LATENT_LOW) or np.any(z > GAN_LATENT_HIGH) or not np.all(np.isfinite(z)):
        raise DomainError(f"latent vector outside [{GAN_LATENT_LOW:g}, {GAN_LATENT_HIGH:g}]")
    return 2.0 * (z - GAN_LATENT_LOW) / (GAN_LATENT_HIGH - GAN_LATENT_LOW) - 1.0


def generate_tensor(generator, z):
    """Softmax output (B, H, W, 3) for latent vectors z (B, 2) or (2,)."""
    return generator.forward(rescale_latent(z), cache=False)


def generate(generator, z):
    """MicrostructureImage for one latent vector."""
    z = np.asarray(z, dtype=float)
    if z.shape != (generator.input_shape[0],):
        raise DimensionError(f"latent vector must have shape ({generator.input_shape[0]},), got {z.shape}")
    return decode_one_hot(generate_tensor(generator, z)[0])


def generate_batch(generator, zs):
    return decode_one_hot(generate_tensor(generator, zs))


def latent_fraction_map(generator, resolution=21):
    """Martensite fraction of the generated image over a resolution x resolution z grid."""
    axis = np.linspace(GAN_LATENT_LOW, GAN_LATENT_HIGH, resolution)
    z1, z2 = np.meshgrid(axis, axis, indexing="ij")
    zs = np.column_stack([z1.ravel(), z2.ravel()])
    images = generate_batch(generator, zs)
    fractions = [martensite_fraction(im) for im in images]
    return pd.DataFrame({"z1": zs[:, 0], "z2": zs[:, 1], "martensite_fraction": fractions})


def _sample_latent(rng, n, dim):
    return rng.uniform(GAN_LATENT_LOW, GAN_LATENT_HIGH, size=(n, dim))


def _critic_step(generator, critic, optimizer, real, rng, config):
    b = real.shape[0]
    fake = generator.forward(rescale_latent(_sample_latent(rng, b, config.latent_dim)), cache=False)
    scores = critic.forward(np.concatenate([real, fake]))[:, 0]
    w = critic_loss(scores[:b], scores[b:])
    # critic maximizes W: minimize -W
    grad = np.concatenate([np.full(b, -1.0 / b), np.full(b, 1.0 / b)])[:, None]
    critic.backward(grad)
    optimizer.step(critic.parameters(), critic.gradients())
    clip_weights(critic, config.clip)
    return w


def _generator_step(generator, critic, optimizer, rng, config):
    b = config.batch_size
    fake = generator.forward(rescale_latent(_sample_latent(rng, b, config.latent_dim)))
    scores = critic.forward(fake)[:, 0]
    loss = -float(scores.mean())
    d_fake = critic.backward(np.full((b, 1), -1.0 / b))
    generator.backward(d_fake)
    optimizer.step(generator.parameters(), generator.gradients())
    return loss


def train_wgan(dataset, config=None, rng=None, checkpoint_dir=None, generator=None, critic=None,
               start_iteration=0, optimizers=None):
    """
    Train on a one-hot dataset (N, H, W, 3). Deterministic given the rng.
    Pass generator/critic/optimizers/start_iteration to resume from a checkpoint.
    """
    config = config or WganConfig()
    data = np.asarray(dataset, dtype=np.float64)
    if data.ndim != 4 or data.shape[0] == 0:
        raise ConfigError("dataset must be a non-empty (N, H, W, 3) one-hot array")
    size = data.shape[1]
    if generator is None:
        generator = build_generator(rng.substream("generator/init"), config.latent_dim, size)
    if critic is None:
        critic = build_critic(rng.substream("critic/init"), size)
        clip_weights(critic, config.clip)
    g_opt, c_opt = optimizers or (Adam(config.learning_rate), Adam(config.learning_rate))
    batches = rng.substream("batches")
    noise = rng.substream("latent")

    rows = []
    for i in range(start_iteration, config.iterations):
        if i % config.cycle == config.cycle - 1:
            loss = _generator_step(generator, critic, g_opt, noise, config)
            phase = "generator"
        else:
            idx = batches.integers(0, data.shape[0], size=config.batch_size)
            loss = _critic_step(generator, critic, c_opt, data[idx], noise, config)
            phase = "critic"
        if not np.isfinite(loss):
            logger.error("non-finite %s loss at iteration %d", phase, i)
            raise DivergenceError(f"{phase} loss is not finite", step=i, term=phase)
        rows.append((i, loss, phase))

        if config.log_every and (i + 1) % config.log_every == 0:
            logger.info("iteration %d: %s loss %.5f", i + 1, phase, loss)
        if checkpoint_dir and config.checkpoint_every and (i + 1) % config.checkpoint_every == 0:
            save_wgan(checkpoint_dir, generator, critic, g_opt, c_opt, i + 1)

    trace = pd.DataFrame(rows, columns=TRACE_COLUMNS)
    return WganResult(generator, critic, trace, g_opt, c_opt)


def save_wgan(directory, generator, critic, g_opt, c_opt, iteration):
    directory = Path(directory)
    extra = {"iteration": int(iteration)}
    save_checkpoint(directory / f"generator{CHECKPOINT_SUFFIX}", generator, g_opt, extra=extra)
    save_checkpoint(directory / f"critic{CHECKPOINT_SUFFIX}", critic, c_opt, extra=extra)
