from .engine import SynthItem, SynthesisResult, SynthesisEngine, plan_items
from .preview import Intermediates, save_intermediates, load_intermediates, render_preview, \
    preview_record, intermediates_path
