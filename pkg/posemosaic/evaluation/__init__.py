from .metrics import mpjpe_abs, mpjpe_aligned, align_poses, pixel_error, joint_groups, ALIGNMENT_MODES
from .protocol import EvalRow, EvalReport, run_protocol
