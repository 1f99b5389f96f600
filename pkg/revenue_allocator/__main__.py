import sys

from revenue_allocator.cli import main

sys.exit(main())
