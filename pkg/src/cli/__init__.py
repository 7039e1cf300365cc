"""Command implementations for the command line interface."""

from .commands import (
    RUN_MANIFEST_NAME,
    exit_code_for,
    resolve_manifest,
    load_cohort,
    load_session,
    write_run_manifest,
    cmd_generate,
    cmd_train,
    cmd_crossval,
    cmd_sweep,
    cmd_predict,
    cmd_interpret,
    cmd_trace,
)

__all__ = [
    "RUN_MANIFEST_NAME",
    "exit_code_for",
    "resolve_manifest",
    "load_cohort",
    "load_session",
    "write_run_manifest",
    "cmd_generate",
    "cmd_train",
    "cmd_crossval",
    "cmd_sweep",
    "cmd_predict",
    "cmd_interpret",
    "cmd_trace",
]
