"""
Harness
Command-line front end, safe execution, audits and method comparisons.
"""
