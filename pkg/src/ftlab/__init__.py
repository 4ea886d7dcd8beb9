"""Numerical laboratory for fault-tolerance constructions.

Modules: :mod:`qcore` (states, operators, measurement), :mod:`shor`,
:mod:`concat` and :mod:`exrec` (repetition baseline, threshold recursion,
rectangles), :mod:`faultpath`, :mod:`ctrlnoise`, :mod:`immune`,
:mod:`corrtail`, and the :mod:`harness` CLI.
"""

__version__ = "0.1.0"
