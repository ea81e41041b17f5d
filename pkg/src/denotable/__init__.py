"""Toolkit for finding the logical forms behind a table answer.

Given a table, a question, and its answer, the package enumerates every
logical form (under a size budget) whose execution yields that answer,
then narrows the survivors to the semantically correct ones by executing
them on perturbed copies of the table and asking which perturbed answers
a human accepts.
"""

__version__ = "0.1.0"
