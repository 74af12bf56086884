import sys

from cvdloss.cli import main

sys.exit(main())
