import sys

from mtgpkit.cli import main

sys.exit(main())
