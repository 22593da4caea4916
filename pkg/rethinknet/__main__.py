import sys

from rethinknet.cli import main

sys.exit(main())
