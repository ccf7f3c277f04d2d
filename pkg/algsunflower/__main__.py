import sys

from algsunflower.cli import main

sys.exit(main())
