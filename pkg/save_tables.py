import glob
import json
import os
import sys

import pandas as pd

sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), 'src'))

from utils.pipeline import constants_ledger  # noqa: E402


def load_certificate(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        print(f"Skipping {path}: {e}")
        return None


def save_ledgers(report_dir: str = 'reports'):
    """Write ledger_n<n>.csv next to every certificate_n<n>.json in report_dir."""
    written = []
    summary = []
    for path in sorted(glob.glob(os.path.join(report_dir, 'certificate_n*.json'))):
        certificate = load_certificate(path)
        if certificate is None:
            continue
        df = constants_ledger(certificate)
        out = os.path.join(report_dir, f"ledger_n{certificate['n']}.csv")
        df.to_csv(out, index=False)
        written.append(out)
        summary.append({'n': certificate['n'], 'conclusion': certificate['conclusion'],
                        'm_max': certificate.get('m_max'),
                        'survivors': len(certificate.get('survivors', []))})
    if summary:
        pd.DataFrame(summary).to_csv(os.path.join(report_dir, 'summary.csv'), index=False)
    return written


if __name__ == "__main__":
    target = sys.argv[1] if len(sys.argv) > 1 else os.environ.get('FIBPOWERS_REPORT_DIR', 'reports')
    for name in save_ledgers(target):
        print("Wrote", name)
