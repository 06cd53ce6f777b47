"""longimodel: train, register, serve, and monitor predictive models over
longitudinal patient event records."""

__version__ = "0.1.0"
