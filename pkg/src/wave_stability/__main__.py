import sys

from wave_stability.cli import main

if __name__ == "__main__":
    sys.exit(main())
