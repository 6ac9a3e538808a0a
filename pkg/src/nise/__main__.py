import sys

from nise.cli import main

sys.exit(main())
