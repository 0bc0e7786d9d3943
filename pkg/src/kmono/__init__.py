"""k-monotonicity testers, exact distance oracles and hard-instance generators."""
