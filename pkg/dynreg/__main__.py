import sys

from dynreg.cli import main

sys.exit(main())
