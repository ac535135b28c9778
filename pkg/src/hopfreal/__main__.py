import sys

from hopfreal.cli import main

sys.exit(main())
