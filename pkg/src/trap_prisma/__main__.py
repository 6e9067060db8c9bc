import sys

from trap_prisma.cli import main

sys.exit(main())
