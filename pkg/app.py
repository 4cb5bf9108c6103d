# app.py
import logging
import sys

import config
from ui.cli import main

# --- Logging ---
logging.basicConfig(level=config.LOG_LEVEL, format=config.LOG_FORMAT)
logger = logging.getLogger(__name__)

if __name__ == "__main__":
    logger.debug(f"Starting TreeDefrag: {' '.join(sys.argv[1:])}")
    sys.exit(main())
