"""Reference detector: dynamic-filter frame encoder, recurrent-memory
transformer over frame embeddings, and ten per-artifact prediction heads."""

from .params import AdfeConfig, ModelParams, RmvitConfig, init_params, load_params, param_layout, save_params
from .network import (
    HeadOutput,
    adfe_forward,
    adfe_masks,
    clip_scores,
    mvad_forward,
    predict_heads,
    rmvit_forward,
)

__all__ = [
    "AdfeConfig",
    "RmvitConfig",
    "ModelParams",
    "param_layout",
    "init_params",
    "save_params",
    "load_params",
    "HeadOutput",
    "adfe_forward",
    "adfe_masks",
    "rmvit_forward",
    "predict_heads",
    "mvad_forward",
    "clip_scores",
]
