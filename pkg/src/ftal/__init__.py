"""A multi-language system pairing a functional language with a
stack-based typed assembly, connected by type-directed boundaries.

The package provides the shared syntax tree, a parser and pretty-printer
for the concrete syntax, a typechecker over both languages, boundary
type and value translations, a deterministic small-step machine with
fuel and tracing, a differential-equivalence harness, and a command-line
interface.
"""

__version__ = "0.1.0"
