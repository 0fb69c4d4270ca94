import sys

from ciprng.cli import main

sys.exit(main())
