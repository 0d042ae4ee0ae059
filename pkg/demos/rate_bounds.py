"""Observed descent/null counts against the iteration-complexity ceilings.

Equivalent to ``python -m proxbundle verify-bounds holder-bounds``.
"""
import sys

from proxbundle import harness

spec = harness.load_experiment("holder-bounds")
checks, code = harness.verify_bounds(spec, out=sys.stdout)
print(f"{sum(c.status == 'PASS' for c in checks)} PASS, {sum(c.status == 'FAIL' for c in checks)} FAIL")
sys.exit(code)
