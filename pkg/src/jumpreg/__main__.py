import sys

from jumpreg.cli import main

sys.exit(main())
