import sys

from incomeqr.cli import main

sys.exit(main())
