"""Python surface of the gazefusion core.

The heavy lifting lives in the compiled `_gazefusion` module; this package
re-exports it under a friendlier name.
"""

from _gazefusion import (  # noqa: F401
    GazeModel,
    GazefusionError,
    HeadBox,
    ModelConfig,
    Sample,
    SynthSpec,
    avg_distance,
    colorize_depth,
    crop_head,
    generate_synthetic,
    heatmap_auc,
    load_annotations,
    load_model,
    render_gt_heatmap,
    render_head_mask,
    save_checkpoint,
    save_dataset,
    set_num_threads,
    train_toy,
    validate_sample,
    __version__,
)

__all__ = [
    "GazeModel",
    "GazefusionError",
    "HeadBox",
    "ModelConfig",
    "Sample",
    "SynthSpec",
    "avg_distance",
    "colorize_depth",
    "crop_head",
    "generate_synthetic",
    "heatmap_auc",
    "load_annotations",
    "load_model",
    "render_gt_heatmap",
    "render_head_mask",
    "save_checkpoint",
    "save_dataset",
    "set_num_threads",
    "train_toy",
    "validate_sample",
    "__version__",
]
