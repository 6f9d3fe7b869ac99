#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

use alloc::vec::Vec;
use nalgebra::DMatrix;

pub fn probe_eigen(n: usize) -> Vec<f64> {
    let m = DMatrix::<f64>::from_fn(n, n, |i, j| if i == j { -2.0 } else { 1.0 });
    let eig = m.complex_eigenvalues();
    let sym = nalgebra::SymmetricEigen::new(DMatrix::<f64>::identity(n, n));
    let lu = DMatrix::<f64>::identity(n, n).lu();
    let _ = lu.solve(&nalgebra::DVector::from_element(n, 1.0));
    let svd = DMatrix::<f64>::identity(n, n).svd(false, false);
    let mut out: Vec<f64> = eig.iter().map(|c| c.re + libm::log(2.0)).collect();
    out.push(sym.eigenvalues[0]);
    out.push(svd.singular_values[0]);
    out
}
