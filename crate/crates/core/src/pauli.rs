//! Two-level operators in the `(g, e)` basis: index 0 is the ground state.

use faer::Mat;

use crate::linalg::{CMat, C64, I, ONE, ZERO};

fn from(entries: [[C64; 2]; 2]) -> CMat {
    Mat::from_fn(2, 2, |i, j| entries[i][j])
}

/// `diag(−1, +1)`.
pub fn sigma_z() -> CMat {
    from([[-ONE, ZERO], [ZERO, ONE]])
}

pub fn sigma_x() -> CMat {
    from([[ZERO, ONE], [ONE, ZERO]])
}

/// `i(σ− − σ+)`, so `⟨g|σ_y|e⟩ = i`.
pub fn sigma_y() -> CMat {
    from([[ZERO, I], [-I, ZERO]])
}

/// `|e⟩⟨g|`.
pub fn sigma_plus() -> CMat {
    from([[ZERO, ZERO], [ONE, ZERO]])
}

/// `|g⟩⟨e|`.
pub fn sigma_minus() -> CMat {
    from([[ZERO, ONE], [ZERO, ZERO]])
}

/// `σ+σ− = |e⟩⟨e|`.
pub fn excited_projector() -> CMat {
    from([[ZERO, ZERO], [ZERO, ONE]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff, scale};

    #[test]
    fn algebra() {
        // σ_z σ_x = i σ_y and σ+σ− projects on |e⟩
        let zx = &sigma_z() * &sigma_x();
        assert!(max_abs_diff(&zx, &scale(&sigma_y(), I)) < 1e-15);
        assert!(max_abs_diff(&(&sigma_plus() * &sigma_minus()), &excited_projector()) < 1e-15);
        let x = &sigma_plus() + &sigma_minus();
        assert!(max_abs_diff(&x, &sigma_x()) < 1e-15);
    }
}
