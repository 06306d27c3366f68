import sys

from krl.cli import main


sys.exit(main())
