"""
Input and output path checks for the CLI.
"""

import os
from pathlib import Path
from typing import Optional, Union

PathLike = Union[str, Path]


def validate_input_file(file_path: Optional[PathLike]) -> Optional[str]:
    """
    Check that an input file exists and is readable.

    Returns:
        None when the file is usable, otherwise a human-readable problem
    """
    if not file_path:
        return "no file given"
    path = os.path.abspath(file_path)
    if not os.path.exists(path):
        return f"file not found: {file_path}"
    if not os.path.isfile(path):
        return f"not a regular file: {file_path}"
    if not os.access(path, os.R_OK):
        return f"file is not readable: {file_path}"
    return None


def validate_output_file(file_path: Optional[PathLike]) -> Optional[str]:
    """
    Check that an output file can be created or overwritten.

    Returns:
        None when the path is writable, otherwise a human-readable problem
    """
    if not file_path:
        return "no file given"
    path = os.path.abspath(file_path)
    if os.path.isdir(path):
        return f"output path is a directory: {file_path}"
    if os.path.exists(path):
        return None if os.access(path, os.W_OK) else f"output file is not writable: {file_path}"
    parent = os.path.dirname(path)
    if not os.path.isdir(parent):
        return f"output directory does not exist: {parent}"
    if not os.access(parent, os.W_OK):
        return f"output directory is not writable: {parent}"
    return None
