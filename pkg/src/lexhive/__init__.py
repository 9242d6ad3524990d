"""lexhive: collaborative vocabulary development with an AI refinement loop.

Humans propose terms, definitions, and usage examples; an AI backend drafts
one definition per term and revises it under human feedback; the crowd votes;
every action lands in an append-only, replayable provenance log.
"""

__version__ = "0.1.0"
