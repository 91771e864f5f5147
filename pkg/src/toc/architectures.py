"""Network architecture builders shared by the curiosity module and the agent.

The full-resolution visual encoder follows the published layer table
verbatim, including its 124-channel third conv stage.  The desk profile
swaps in a small stack sized for 42x42 frames so CI-scale runs stay cheap;
that stack is an artifact of this codebase, not of the reference setup.
"""

from __future__ import annotations

from .numerics import Conv, Dense, NetworkSpec

# conv 32@8x8/4 -> 64@4x4/2 -> 124@3x3/1 -> 256@2x2/1 -> dense 256, all LeakyReLU.
# Valid convolutions walk 84 -> 20 -> 9 -> 7 -> 6, so the dense layer sees
# 6*6*256 = 9216 inputs.  Construction asserts this exact parameter count.
FULL_ENCODER_PARAM_COUNT = 2_593_244
FULL_IMAGE_SIZE = 84
FULL_LATENT_DIM = 256


def full_encoder_spec():
    spec = NetworkSpec(
        input_shape=(1, FULL_IMAGE_SIZE, FULL_IMAGE_SIZE),
        layers=(
            Conv(32, 8, 4),
            Conv(64, 4, 2),
            Conv(124, 3, 1),
            Conv(256, 2, 1),
            Dense(FULL_LATENT_DIM),
        ),
    )
    assert spec.param_count() == FULL_ENCODER_PARAM_COUNT, spec.param_count()
    return spec


def desk_encoder_spec(image_size=42, latent_dim=64):
    if image_size >= 32:
        convs = (Conv(8, 8, 4), Conv(16, 4, 2), Conv(32, 3, 1))
    else:  # down to 12x12, for tests and finite-difference checks
        convs = (Conv(8, 4, 2), Conv(16, 3, 1), Conv(32, 2, 1))
    return NetworkSpec(
        input_shape=(1, image_size, image_size),
        layers=convs + (Dense(latent_dim),),
    )


def encoder_spec(profile, image_size, latent_dim):
    if profile == "paper":
        if image_size != FULL_IMAGE_SIZE or latent_dim != FULL_LATENT_DIM:
            raise ValueError(
                "paper profile fixes the encoder at 84x84 -> 256 features"
            )
        return full_encoder_spec()
    return desk_encoder_spec(image_size, latent_dim)


def decoder_spec(latent_dim, touch_dim, hidden=64):
    """Two-layer MLP from visual features to a predicted touch vector."""
    return NetworkSpec(
        input_shape=(latent_dim,),
        layers=(Dense(hidden), Dense(touch_dim, activation="identity")),
    )


def forward_model_spec(latent_dim, action_dim, hidden=None):
    """Two-layer MLP from (features, action) to predicted next features."""
    if hidden is None:
        hidden = max(latent_dim, 64)
    return NetworkSpec(
        input_shape=(latent_dim + action_dim,),
        layers=(Dense(hidden), Dense(latent_dim, activation="identity")),
    )


def inverse_dynamics_spec(latent_dim, action_dim, hidden=128):
    return NetworkSpec(
        input_shape=(2 * latent_dim,),
        layers=(Dense(hidden), Dense(action_dim, activation="identity")),
    )


def touch_forward_spec(touch_dim, action_dim, hidden=64):
    return NetworkSpec(
        input_shape=(touch_dim + action_dim,),
        layers=(Dense(hidden), Dense(touch_dim, activation="identity")),
    )


def rnd_spec(latent_dim, hidden=128, out_dim=64):
    return NetworkSpec(
        input_shape=(latent_dim,),
        layers=(Dense(hidden), Dense(out_dim, activation="identity")),
    )


def policy_spec(latent_dim, action_dim, hidden=128):
    """Trunk emitting concatenated [mean, log_std] for the squashed Gaussian."""
    return NetworkSpec(
        input_shape=(latent_dim,),
        layers=(
            Dense(hidden),
            Dense(hidden),
            Dense(2 * action_dim, activation="identity"),
        ),
    )


def critic_spec(latent_dim, action_dim, hidden=128):
    return NetworkSpec(
        input_shape=(latent_dim + action_dim,),
        layers=(Dense(hidden), Dense(hidden), Dense(1, activation="identity")),
    )
