import sys

from curvscape.cli import main

sys.exit(main())
