from pilotwave.experiments.chsh import (
    OPTIMAL_SETTINGS,
    ChshResult,
    LocalBoundReport,
    chsh,
    chsh_from_records,
    local_deterministic_chsh_bound,
    singlet_chsh,
    strategy_records,
)
from pilotwave.experiments.doubleslit import DoubleSlitConfig, DoubleSlitResult, double_slit
from pilotwave.experiments.eprb import (
    EPRBConfig,
    NonlocalityReport,
    eprb_run,
    nonlocality_probe,
    predicted_flip_fraction,
    singlet_correlation,
)
from pilotwave.experiments.nogo import ObstructionReport, von_neumann_obstruction
from pilotwave.experiments.outcomes import OutcomeRecord
from pilotwave.experiments.sterngerlach import SternGerlachConfig, stern_gerlach
