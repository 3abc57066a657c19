from .jsonl import RecordWriter, read_records, read_header, decode_records, atomic_write_text, append_journal, \
    read_journal
from .images import read_png, write_png, write_index_png, draw_skeleton, palette
from .formats import CorpusRecord, CorpusManifest, SynthRecord, read_skeleton, write_skeleton, read_manifest, \
    write_manifest, load_corpus, read_pose_records, write_pose_records, read_cameras, write_cameras, \
    read_synth_records, write_synth_records, synth_record_to_dict, synth_record_from_dict, read_cluster_model, \
    write_cluster_model, check_round_trip, reprojection_error
from .mirroring import mirror_corpus, mirror_record, mirror_pose, mirrored_id
from .validation import validate_manifest
from .stick_corpus import generate_stick_corpus, render_stick_figure, capsule_mask, textured_background
