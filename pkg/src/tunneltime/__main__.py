import sys

from tunneltime.cli import main

sys.exit(main())
