"""Ray deflection of slow light in EIT media with inhomogeneous fields."""
