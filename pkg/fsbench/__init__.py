# fsbench - class-level feature selection benchmark
__version__ = "0.1.0"
