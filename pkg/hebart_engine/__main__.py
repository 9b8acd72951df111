import sys

from hebart_engine.cli import main

sys.exit(main())
