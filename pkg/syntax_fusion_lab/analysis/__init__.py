"""Post-hoc summaries of `sfl` output directories."""
