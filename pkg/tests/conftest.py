import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture(scope="session")
def chain(tmp_path_factory):
    """One full pipeline run on a small planted dataset, shared read-mostly.

    Tests may re-run individual commands only when the rerun provably
    rewrites identical bytes; anything else belongs in a fresh out dir.
    """
    from cutlabel.pipeline import commands
    from cutlabel.pipeline.config import PipelineConfig

    root = tmp_path_factory.mktemp("chain")
    cfg = PipelineConfig(
        data_dir=root / "data",
        out_dir=root / "run",
        mode="soft",
        global_mode="original",
        seed=0,
    )
    commands.cmd_synth(cfg, images=14, classes=6, dim=48, uniform_images=2, previews=True)
    commands.cmd_discover(cfg)
    commands.cmd_filter(cfg)
    commands.cmd_train(cfg)
    commands.cmd_relabel(cfg)
    commands.cmd_resolve(cfg)
    commands.cmd_eval(cfg)
    return cfg
