"""Linear models, bounded-variable simplex, branch and bound and the scheduling MILP builders."""
