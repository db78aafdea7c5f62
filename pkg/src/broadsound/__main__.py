import sys

from broadsound.cli import main

sys.exit(main())
