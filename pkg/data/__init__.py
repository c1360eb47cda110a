"""
Data
Historical service-time records, interval estimation, instance generation
and scenario sampling for out-of-sample evaluation.
"""
