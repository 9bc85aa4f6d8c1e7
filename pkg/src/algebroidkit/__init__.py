"""algebroidkit: exact computations with finitely presented Lie algebroids,
their pullbacks and descent data, Lie algebroids over finite groupoids with
the associated LA-groupoids, and Chevalley-Eilenberg / Cech cohomology."""

__version__ = "0.1.0"
