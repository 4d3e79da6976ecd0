use crate::field_kit::Jet2;
use crate::linalg::SymMatrix;

/// `𝓜(ϱ) = [[ρ_tt − ϱ, −∇ρ_tᵀ], [−∇ρ_t, ϱI + Hess_x ρ]]`.
pub fn build_m(rho: &Jet2, varrho: f64) -> SymMatrix {
    let n = rho.n;
    let mut m = SymMatrix::zeros(1 + n);
    m.set(0, 0, rho.hess_tt - varrho);
    for j in 0..n {
        m.set(0, j + 1, -rho.hess_tx[j]);
        for k in j..n {
            let d = if j == k { varrho } else { 0.0 };
            m.set(j + 1, k + 1, d + rho.hess_xx(j, k));
        }
    }
    m
}
