import sys

from czreach.cli import main

sys.exit(main())
