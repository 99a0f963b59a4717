"""File formats, manifests, batch evaluation and histogram exports."""

from .analysis import HistogramTable, conditional_histogram, joint_histogram2d
from .evaluate import OOD_MEAN, run_eval, write_report_csv
from .io import ParseError, load_logits_csv, write_logits_csv
from .manifest import Manifest, ManifestError, load_manifest
