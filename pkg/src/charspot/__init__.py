"""Non-neural pipeline of a one-stage character-level text spotter."""

from .annotation import CharBox, SceneAnnotation, TextAnnotation
from .charset import DEFAULT_CHARSET, Charset, NotInCharset, class_of, normalize_transcript
from .config import PipelineConfig
from .densemaps import (
    DenseMapStack,
    GeometryCode,
    decode_char_candidates,
    decode_geometry,
    decode_word_candidates,
    encode_geometry,
    encode_ground_truth,
    map_cell_to_image_point,
)
from .detections import CharDetection, TextInstance, WordDetection
from .evaluation import MatchReport, evaluate_dataset, match_detections, match_e2e
from .geometry import Point, Polygon, RotatedBox, box_corners, iou, polygon_intersection_area
from .harvest import DatasetState, NoiseModel, accept_rule, harvest_step, oracle_detector, run_iterations
from .lexicon import LexiconSet, edit_distance, lexicon_correct
from .postprocess import group_characters, nms, order_characters, spot
from .synthgen import SynthConfig, generate_corpus, generate_scene

__version__ = "0.1.0"
