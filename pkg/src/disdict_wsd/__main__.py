import sys

from .harness.pipeline import main

sys.exit(main())
