from .checkpoint import save_checkpoint, load_checkpoint, encode_checkpoint, decode_checkpoint
from .images import write_grid, tile_grid, encode_pgm, read_pgm, interleave_pairs
from .artifacts import (write_trainlog, read_trainlog, write_report, read_report, write_histogram_csv,
                        TRAINLOG_FILE, BEST_CHECKPOINT, FINAL_CHECKPOINT, REPORT_FILE, HISTOGRAM_FILE)
