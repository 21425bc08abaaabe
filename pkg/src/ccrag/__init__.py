"""Retrieval-augmented code completion toolkit for C++/protobuf codebases."""

__version__ = "0.1.0"
