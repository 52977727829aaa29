"""Annotation backend for low-resource language documentation.

Trains phoneme-transcription and gloss-suggestion models from uploaded data
and serves annotation candidates for human review; accepted or edited
results feed back as fine-tuning data.
"""

__version__ = "0.1.0"
