import os
from importlib import resources
from pathlib import Path

ENV_VAR = "TRAPNOISE_DATA_DIR"


def data_path(name: str) -> Path:
    """Location of a bundled data file, honouring ``$TRAPNOISE_DATA_DIR``."""
    override = os.environ.get(ENV_VAR)
    if override:
        return Path(override) / name
    return Path(str(resources.files("trapnoise") / "data" / name))
