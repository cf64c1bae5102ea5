import sys

from foliate.cli import main

sys.exit(main())
