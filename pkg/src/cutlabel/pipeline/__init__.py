"""Batch commands, dataset synthesis, and the HTTP annotation service."""

from cutlabel.pipeline.commands import (
    cmd_discover,
    cmd_eval,
    cmd_filter,
    cmd_relabel,
    cmd_resolve,
    cmd_sweep,
    cmd_synth,
    cmd_train,
    load_feature_map,
    read_masks,
    read_selected,
)
from cutlabel.pipeline.config import (
    PipelineConfig,
    build_config,
    load_class_names,
    load_config_file,
    load_discovery_presets,
    require_dataset,
)
from cutlabel.pipeline.service import ServiceState, build_state, cmd_serve, make_server
from cutlabel.pipeline.synth import (
    PlantedImage,
    SynthSpec,
    class_names,
    make_prototypes,
    plant_image,
    planted_logit_map,
    read_logit_map,
    synth_dataset,
    uniform_image,
    write_logit_map,
)

__all__ = [
    "PipelineConfig",
    "PlantedImage",
    "ServiceState",
    "SynthSpec",
    "build_config",
    "build_state",
    "class_names",
    "cmd_discover",
    "cmd_eval",
    "cmd_filter",
    "cmd_relabel",
    "cmd_resolve",
    "cmd_serve",
    "cmd_sweep",
    "cmd_synth",
    "cmd_train",
    "load_class_names",
    "load_config_file",
    "load_discovery_presets",
    "load_feature_map",
    "make_prototypes",
    "make_server",
    "plant_image",
    "planted_logit_map",
    "read_logit_map",
    "read_masks",
    "read_selected",
    "require_dataset",
    "synth_dataset",
    "uniform_image",
    "write_logit_map",
]
