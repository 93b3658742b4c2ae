//! RBF regressor, persistent excitation along references, and a least-squares
//! fit of the unknown Coriolis and friction term.

use cdl_fleet::engine::reference::ReferenceSpec;
use cdl_fleet::model::{unknown_dynamics, BodyVelocity, VehicleParams};
use cdl_fleet::rbf::{pe_level, predict, RbfLattice, WeightMatrix, DEFAULT_ACTIVATION_THRESHOLD};
use nalgebra::{DMatrix, MatrixXx2, Vector2};

fn main() -> Result<(), cdl_fleet::Error> {
    let lattice = RbfLattice::build([0.0, 0.0], [4.0, 4.0], [5, 5], 0.7)?;
    let params = VehicleParams::default();
    let dt = 0.01;
    let mut all = Vec::new();
    for (i, spec) in ReferenceSpec::fleet_defaults().iter().enumerate() {
        let r = spec.compile();
        let steps = (r.period() / dt) as usize;
        let traj: Vec<Vector2<f64>> = (0..steps)
            .map(|k| {
                let s = r.eval(k as f64 * dt);
                Vector2::new(s.v_r, s.omega_r)
            })
            .collect();
        let pe = pe_level(&lattice, &traj, dt, DEFAULT_ACTIVATION_THRESHOLD);
        println!(
            "reference {}: {} active nodes, pe_level {:.3e}",
            i + 1,
            pe.active.len(),
            pe.level
        );
        all.extend(traj);
    }

    // Ridge fit of H over the union of the reference velocity curves.
    let n = lattice.len();
    let s = DMatrix::from_fn(all.len(), n, |k, j| lattice.eval_basis(all[k])[j]);
    let h = DMatrix::from_fn(all.len(), 2, |k, c| {
        unknown_dynamics(&params, &BodyVelocity::from_vector(all[k]))[c]
    });
    let lambda = 1e-5 * all.len() as f64;
    let gram = s.transpose() * &s + DMatrix::identity(n, n) * lambda;
    let w = gram
        .cholesky()
        .expect("regularised Gram matrix is SPD")
        .solve(&(s.transpose() * h));
    let w = WeightMatrix(MatrixXx2::from_column_slice(w.as_slice()));
    let (mut err, mut norm) = (0.0, 0.0);
    for x in &all {
        let hx = unknown_dynamics(&params, &BodyVelocity::from_vector(*x));
        err += (hx - predict(&w, &lattice.eval_basis(*x))).norm_squared();
        norm += hx.norm_squared();
    }
    println!(
        "ridge fit: ||W||_F = {:.3}, relative RMS error {:.2e}",
        w.frobenius(),
        (err / norm).sqrt()
    );
    Ok(())
}
