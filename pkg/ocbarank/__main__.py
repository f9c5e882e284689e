import sys

from ocbarank.main import main

sys.exit(main())
