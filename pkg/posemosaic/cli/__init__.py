from .config import RunConfig, load_run_config, run_config_from_dict
from .commands import cmd_synth, cmd_cluster, cmd_eval, cmd_mirror, cmd_validate, cmd_preview, cmd_gen_test_corpus, \
    read_pose_source, validate_synth_manifest, EXIT_OK, EXIT_INVALID, EXIT_FAILURE
from .main import build_parser, main
