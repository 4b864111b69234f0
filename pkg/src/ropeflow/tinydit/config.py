"""Desk-scale diffusion-transformer configuration."""

from __future__ import annotations

from dataclasses import asdict, dataclass

from ..rope2d import DEFAULT_THETA_BASE


@dataclass(frozen=True)
class ModelConfig:
    image_side: int = 32
    patch_size: int = 2
    d_model: int = 128
    heads: int = 4
    layers: int = 4
    mlp_ratio: int = 4
    class_count: int = 8
    theta_base: float = DEFAULT_THETA_BASE
    qk_bias_init: float = 0.0
    """Shared query/key bias magnitude at initialization.

    Identical constant q/k components turn the rotary phases into a
    relative-position attention kernel, so a nonzero value starts training
    from locality-biased attention instead of a near-uniform one.  The
    trainable biases are free to unlearn it.
    """

    def __post_init__(self):
        if self.image_side % self.patch_size != 0:
            raise ValueError(
                f"image_side {self.image_side} not divisible by patch_size {self.patch_size}"
            )
        if self.d_model % (4 * self.heads) != 0:
            # per-head width must split into two axes of rotation pairs
            raise ValueError(f"d_model {self.d_model} must be divisible by 4*heads {4 * self.heads}")
        for name in ("d_model", "heads", "layers", "mlp_ratio", "class_count", "patch_size"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.theta_base <= 0 or self.theta_base == 1.0:
            raise ValueError("theta_base must be positive and != 1")

    @property
    def head_dim(self):
        return self.d_model // self.heads

    @property
    def pairs_per_axis(self):
        return self.head_dim // 4

    @property
    def train_grid(self):
        """Token-grid side the model is trained at (its positional context)."""
        return self.image_side // self.patch_size

    @property
    def patch_values(self):
        return self.patch_size * self.patch_size

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)
