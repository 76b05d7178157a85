from master.master import MasterModel, MasterSlaveLoop, assign_quotas, evaluate_and_select
from master.state import MasterState, RoundRecord, get_state_summary

__all__ = [
    "MasterModel",
    "MasterSlaveLoop",
    "assign_quotas",
    "evaluate_and_select",
    "MasterState",
    "RoundRecord",
    "get_state_summary",
]
