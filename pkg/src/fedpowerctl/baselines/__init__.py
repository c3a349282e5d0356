from .exhaustive import brute_force_power
from .maxpower import max_power
from .wmmse import WmmseState, link_sum_rate, wmmse, wmmse_iteration, wmmse_links

# Server exchanges per base station per slot; WMMSE gathers the full channel state centrally.
BASELINE_COMM_OVERHEAD = dict(wmmse=1.0, maxpower=0.0)
