from pilotwave.cli.main import main, run_subcommand
from pilotwave.cli.config import parse_config
from pilotwave.cli.render import render_heatmap
