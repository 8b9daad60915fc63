"""File formats: checkpoints, datasets, hierarchy maps and run configs."""
