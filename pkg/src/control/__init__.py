"""Heat-equation null control: HUM synthesis and the staged scheme."""

from .heat import (
    ControlConfig,
    ControlError,
    ControlGramian,
    ControlResult,
    StageReport,
    closed_form_gramian,
    control_gramian,
    heat_propagate,
    observability_check,
    observability_constant,
    synthesize_hum_control,
    trajectory,
)
from .lebeau_robbiano import (
    CostLawReport,
    Schedule,
    Stage,
    cost_law_sweep,
    lebeau_robbiano_schedule,
    run_lr_control,
)

__all__ = [
    'ControlConfig',
    'ControlError',
    'ControlGramian',
    'ControlResult',
    'CostLawReport',
    'Schedule',
    'Stage',
    'StageReport',
    'closed_form_gramian',
    'control_gramian',
    'cost_law_sweep',
    'heat_propagate',
    'lebeau_robbiano_schedule',
    'observability_check',
    'observability_constant',
    'run_lr_control',
    'synthesize_hum_control',
    'trajectory',
]
