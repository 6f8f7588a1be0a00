import logging
import sys

logging.basicConfig(level=logging.WARNING)
console = logging.StreamHandler(sys.stdout)
console.setLevel(logging.DEBUG)
# pilotwave's own loggers are verbose under test; everything else stays at WARNING
logging.getLogger("pilotwave").setLevel(logging.DEBUG)
logging.getLogger("pilotwave").addHandler(console)
logging.getLogger("pilotwave").propagate = False
