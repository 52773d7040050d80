import sys

from gametransfer.harness.cli import main

sys.exit(main())
