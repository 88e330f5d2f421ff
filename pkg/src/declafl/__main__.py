import sys

from declafl.cli import main

sys.exit(main())
