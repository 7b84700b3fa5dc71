import sys
from pathlib import Path

# make sibling helper modules (corpus, randgen) importable from any rootdir
sys.path.insert(0, str(Path(__file__).resolve().parent))
