from algsunflower.cli import main
from algsunflower.version import __version__

__all__ = ["main", "__version__"]
