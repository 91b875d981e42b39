"""Generator, critic, and classifier networks with their training losses.

The critic is trained on a Wasserstein objective with a gradient penalty
along per-sample real/fake interpolates; the generator minimizes the negated
critic score plus a weighted classification term on its own samples; the
classifier minimizes categorical cross-entropy.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
import torch
from torch import nn

from .colors import CLASSES
from .dataset import denormalize

N_CLASSES = len(CLASSES)


@dataclass
class GpConfig:
    """Gradient-penalty weight; one uniform(0,1) interpolation draw per sample."""

    lambda_gp: float = 10.0

    def __post_init__(self):
        if self.lambda_gp < 0:
            raise ValueError("lambda_gp must be >= 0")


def one_hot(codes: torch.Tensor, n_classes: int = N_CLASSES) -> torch.Tensor:
    if codes.numel() and (codes.min() < 0 or codes.max() >= n_classes):
        raise ValueError(f"class codes must be in 0..{n_classes - 1}")
    return torch.nn.functional.one_hot(codes.long(), n_classes).float()


def _dcgan_init(module):
    if isinstance(module, (nn.Conv2d, nn.ConvTranspose2d, nn.Linear)):
        nn.init.normal_(module.weight, 0.0, 0.02)
        if module.bias is not None:
            nn.init.zeros_(module.bias)
    elif isinstance(module, nn.BatchNorm2d):
        nn.init.normal_(module.weight, 1.0, 0.02)
        nn.init.zeros_(module.bias)


class GeneratorNet(nn.Module):
    """Latent + one-hot class -> 32x32 RGB image in [-1, 1] (tanh head)."""

    def __init__(self, z_dim: int = 100, base_channels: int = 256,
                 n_classes: int = N_CLASSES):
        super().__init__()
        if base_channels % 4:
            raise ValueError("base_channels must be divisible by 4")
        self.z_dim = z_dim
        self.n_classes = n_classes
        self.base_channels = base_channels
        b = base_channels
        self.fc = nn.Linear(z_dim + n_classes, 4 * 4 * b)
        self.net = nn.Sequential(
            nn.BatchNorm2d(b),
            nn.ReLU(True),
            nn.ConvTranspose2d(b, b // 2, 4, 2, 1),  # 8x8
            nn.BatchNorm2d(b // 2),
            nn.ReLU(True),
            nn.ConvTranspose2d(b // 2, b // 4, 4, 2, 1),  # 16x16
            nn.BatchNorm2d(b // 4),
            nn.ReLU(True),
            nn.ConvTranspose2d(b // 4, 3, 4, 2, 1),  # 32x32
            nn.Tanh(),
        )
        self.apply(_dcgan_init)

    def forward(self, z: torch.Tensor, class_onehot: torch.Tensor) -> torch.Tensor:
        x = self.fc(torch.cat([z, class_onehot], dim=1))
        x = x.view(-1, self.base_channels, 4, 4)
        return self.net(x)


class CriticNet(nn.Module):
    """Image -> unbounded real score; no layers that couple batch elements."""

    def __init__(self, base_channels: int = 64):
        super().__init__()
        b = base_channels
        self.base_channels = b
        self.net = nn.Sequential(
            nn.Conv2d(3, b, 4, 2, 1),  # 16x16
            nn.LeakyReLU(0.2, True),
            nn.Conv2d(b, 2 * b, 4, 2, 1),  # 8x8
            nn.LeakyReLU(0.2, True),
            nn.Conv2d(2 * b, 4 * b, 4, 2, 1),  # 4x4
            nn.LeakyReLU(0.2, True),
            nn.Flatten(),
            nn.Linear(4 * b * 4 * 4, 1),
        )
        self.apply(_dcgan_init)

    def forward(self, images: torch.Tensor) -> torch.Tensor:
        return self.net(images).squeeze(1)


class ClassifierNet(nn.Module):
    """Image -> 12 class probabilities (softmax head)."""

    def __init__(self, base_channels: int = 64, n_classes: int = N_CLASSES):
        super().__init__()
        b = base_channels
        self.base_channels = b
        self.n_classes = n_classes
        self.net = nn.Sequential(
            nn.Conv2d(3, b, 4, 2, 1),
            nn.LeakyReLU(0.2, True),
            nn.Conv2d(b, 2 * b, 4, 2, 1),
            nn.BatchNorm2d(2 * b),
            nn.LeakyReLU(0.2, True),
            nn.Conv2d(2 * b, 4 * b, 4, 2, 1),
            nn.BatchNorm2d(4 * b),
            nn.LeakyReLU(0.2, True),
            nn.Flatten(),
            nn.Linear(4 * b * 4 * 4, n_classes),
        )
        self.apply(_dcgan_init)

    def forward(self, images: torch.Tensor) -> torch.Tensor:
        return torch.softmax(self.net(images), dim=1)


# ---------------------------------------------------------------------------
# losses
# ---------------------------------------------------------------------------

def sample_latent(batch: int, z_dim: int, seed=None) -> torch.Tensor:
    """Standard-normal latent batch; deterministic when seeded."""
    if batch < 1:
        raise ValueError("batch must be >= 1")
    gen = _as_generator(seed)
    return torch.randn(batch, z_dim, generator=gen)


def _as_generator(seed) -> Optional[torch.Generator]:
    if seed is None or isinstance(seed, torch.Generator):
        return seed
    gen = torch.Generator()
    gen.manual_seed(int(seed))
    return gen


def generator_forward(G: GeneratorNet, z: torch.Tensor,
                      classes: torch.Tensor) -> torch.Tensor:
    if len(z) != len(classes):
        raise ValueError(f"z batch {len(z)} != class batch {len(classes)}")
    return G(z, one_hot(classes, G.n_classes))


def gradient_penalty(D, real: torch.Tensor, fake: torch.Tensor,
                     seed=None) -> torch.Tensor:
    """Mean squared deviation of the critic's input-gradient norm from 1.

    Evaluated at per-sample interpolates u = a*real + (1-a)*fake with one
    uniform a per batch element.
    """
    gen = _as_generator(seed)
    b = real.shape[0]
    a_shape = (b,) + (1,) * (real.dim() - 1)
    alpha = torch.rand(a_shape, generator=gen, dtype=real.dtype)
    u = (alpha * real + (1.0 - alpha) * fake).detach().requires_grad_(True)
    scores = D(u)
    grads = torch.autograd.grad(
        outputs=scores, inputs=u,
        grad_outputs=torch.ones_like(scores),
        create_graph=True,
    )[0]
    norms = grads.reshape(b, -1).norm(2, dim=1)
    return ((norms - 1.0) ** 2).mean()


def critic_loss(D, real: torch.Tensor, fake: torch.Tensor,
                gp: GpConfig, seed=None) -> torch.Tensor:
    """Wasserstein critic loss plus weighted gradient penalty."""
    if real.shape[0] != fake.shape[0]:
        raise ValueError(
            f"real batch {real.shape[0]} != fake batch {fake.shape[0]}"
        )
    loss = -D(real).mean() + D(fake).mean()
    if gp.lambda_gp > 0:
        loss = loss + gp.lambda_gp * gradient_penalty(D, real, fake, seed=seed)
    return loss


def generator_adv_loss(D, fake: torch.Tensor) -> torch.Tensor:
    """Negated mean critic score of the generated batch."""
    if fake.shape[0] < 1:
        raise ValueError("empty batch")
    return -D(fake).mean()


def classifier_loss(Q, images: torch.Tensor, labels: torch.Tensor) -> torch.Tensor:
    """Mean categorical cross-entropy of the classifier on (image, label) pairs."""
    labels = labels.long()
    if labels.numel() and (labels.min() < 0 or labels.max() >= N_CLASSES):
        raise ValueError("labels must be class codes in 0..11")
    probs = Q(images)
    picked = probs[torch.arange(len(labels)), labels]
    return -torch.log(picked.clamp_min(1e-12)).mean()


def generator_total_loss(D, Q, fake: torch.Tensor, labels: torch.Tensor,
                         w_cls: float = 1.0) -> torch.Tensor:
    """Adversarial term plus weighted classification term on the fakes."""
    total = generator_adv_loss(D, fake)
    if w_cls:
        total = total + w_cls * classifier_loss(Q, fake, labels)
    return total


# ---------------------------------------------------------------------------
# bundle
# ---------------------------------------------------------------------------

@dataclass
class ModelBundle:
    """The three networks plus training-step counters."""

    G: GeneratorNet
    D: CriticNet
    Q: ClassifierNet
    config: "object"
    generator_steps: int = 0
    critic_steps: int = 0
    q_steps: int = 0
    checkpoint_id: str = "unsaved"

    def counters(self) -> dict:
        return {
            "generator_steps": self.generator_steps,
            "critic_steps": self.critic_steps,
            "q_steps": self.q_steps,
        }

    def generate(self, class_idx: int, count: int, seed) -> np.ndarray:
        """Sample `count` icons of one class as uint8 HxWx3 arrays."""
        if not 0 <= class_idx < N_CLASSES:
            raise ValueError(f"class_idx out of range: {class_idx}")
        gen = _as_generator(seed)
        z = torch.randn(count, self.G.z_dim, generator=gen)
        codes = torch.full((count,), class_idx, dtype=torch.long)
        was_training = self.G.training
        self.G.eval()
        try:
            with torch.no_grad():
                out = generator_forward(self.G, z, codes)
        finally:
            self.G.train(was_training)
        return denormalize(out.permute(0, 2, 3, 1).numpy())


def new_bundle(config) -> ModelBundle:
    """Build freshly initialized networks from a config's seeds and sizes."""
    torch.manual_seed(config.seed_weights)
    G = GeneratorNet(z_dim=config.z_dim, base_channels=config.g_base_channels)
    D = CriticNet(base_channels=config.dq_base_channels)
    Q = ClassifierNet(base_channels=config.dq_base_channels)
    return ModelBundle(G=G, D=D, Q=Q, config=config)
