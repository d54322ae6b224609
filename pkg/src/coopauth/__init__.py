"""Cooperative low-overhead message authentication for vehicular networks.

Roadside units hand out short-lived pseudonymous certificates, and vehicles
split the work of checking each other's beacon signatures.
"""

__version__ = "0.1.0"
