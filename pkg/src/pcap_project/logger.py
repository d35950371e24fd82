import logging
import os
from datetime import datetime

LOG_DIR = os.getenv("PCAP_LOG_DIR")

logger = logging.getLogger("pcapLogger")
logger.setLevel(logging.INFO)
logger.propagate = True

formatter = logging.Formatter("[%(asctime)s: %(levelname)s: %(module)s: %(message)s]")

if not logger.handlers:
    if LOG_DIR:
        os.makedirs(LOG_DIR, exist_ok=True)
        LOG_FILE = f"{datetime.now().strftime('%m_%d_%Y_%H_%M_%S')}.log"
        # delay=True prevents the handler from creating the file until first write
        handler: logging.Handler = logging.FileHandler(
            os.path.join(LOG_DIR, LOG_FILE), delay=True
        )
        handler.setLevel(logging.INFO)
    else:
        # Without a log directory only warnings and errors reach stderr
        handler = logging.StreamHandler()
        handler.setLevel(logging.WARNING)

    handler.setFormatter(formatter)
    logger.addHandler(handler)
