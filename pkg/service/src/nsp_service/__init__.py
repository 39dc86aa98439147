"""NSP scoring microservice: serves a pretrained next-sentence-prediction
head over POST /v1/nsp, plus a batch precompute utility that writes score
files consumable by the pipeline's file backend."""

__version__ = "0.1.0"
