import datetime
import json
import logging
import math
import os
from multiprocessing import Pool

import numpy as np
import pandas as pd
from tqdm import tqdm

from config import LOG_DIR, THREADS, TOOL_VERSION, config_hash


def setup_logging(log_level=logging.INFO):
  """Setup logging configuration"""
  os.makedirs(LOG_DIR, exist_ok=True)

  timestamp = datetime.datetime.now().strftime("%Y%m%d_%H%M%S")
  log_file = os.path.join(LOG_DIR, f"lyapspec_{timestamp}.log")

  # Configure logging
  logging.basicConfig(
    level=log_level,
    format='%(asctime)s - %(levelname)s - %(message)s',
    handlers=[
      logging.FileHandler(log_file, encoding='utf-8'),
      logging.StreamHandler()  # Also output to console
    ],
    force=True
  )

  logger = logging.getLogger(__name__)
  logger.info(f"Logging initialized. Log file: {log_file}")
  return logger


def create_output_directory(fpath):
  """Create the parent directory of an output file"""
  dir_path = os.path.dirname(fpath)
  if dir_path:
    os.makedirs(dir_path, exist_ok=True)
  return dir_path


def to_csv(rows, fpath, columns=None):
  """Write a list of row dicts (or a DataFrame) with lossless float formatting.

  The file is overwritten, so two runs with the same inputs give identical bytes.
  """
  frame = rows if isinstance(rows, pd.DataFrame) else pd.DataFrame(list(rows), columns=columns)
  create_output_directory(fpath)
  frame.to_csv(fpath, index=False, float_format='%.17g')
  logging.getLogger(__name__).info(f"📄 Wrote {len(frame)} rows to {fpath}")
  return fpath


def _jsonable(value):
  if isinstance(value, dict):
    return {str(k): _jsonable(v) for k, v in value.items()}
  if isinstance(value, (list, tuple)):
    return [_jsonable(v) for v in value]
  if isinstance(value, np.ndarray):
    return [_jsonable(v) for v in value.tolist()]
  if isinstance(value, (np.bool_,)):
    return bool(value)
  if isinstance(value, np.integer):
    return int(value)
  if isinstance(value, (float, np.floating)):
    value = float(value)
    if math.isnan(value):
      return 'nan'
    if math.isinf(value):
      return 'inf' if value > 0 else '-inf'
    return value
  return value


def write_json(payload, fpath):
  create_output_directory(fpath)
  with open(fpath, 'w', encoding='utf-8') as fp:
    json.dump(_jsonable(payload), fp, indent=2, sort_keys=True)
    fp.write('\n')
  logging.getLogger(__name__).info(f"📄 Wrote {fpath}")
  return fpath


def write_manifest(config, outputs, error_bars, fpath):
  """Record what a run produced and how far each reported quantity can be trusted."""
  manifest = {
    'config_hash': config_hash(config),
    'tool_version': TOOL_VERSION,
    'subcommand': config.subcommand,
    'seed': config.seed,
    'outputs': sorted(outputs),
    'error_bars': error_bars,
  }
  return write_json(manifest, fpath)


def parallel_map(fn, items, desc=None):
  """Order-preserving map of a module-level function over items.

  Uses a process pool when LYAPSPEC_THREADS > 1, otherwise runs in-process.
  """
  items = list(items)
  if THREADS > 1 and len(items) > 1:
    with Pool(processes=THREADS) as pool:
      return list(tqdm(pool.imap(fn, items), total=len(items), desc=desc, disable=desc is None))
  return [fn(item) for item in tqdm(items, desc=desc, disable=desc is None)]
