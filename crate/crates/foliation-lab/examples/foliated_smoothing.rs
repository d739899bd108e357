//! Smooth the shear-plus-wiggle homeomorphism of the annulus, keeping the
//! horizontal foliation, and print the per-stage report.

use foliation_lab::foliated::{smooth_foliated_homeo_2d, FoliatedHomeo2D, Foliation2D};

fn main() -> foliation_lab::Result<()> {
    let h = FoliatedHomeo2D::shear_wiggle(256, 0.3, 0.02);
    let eps = 0.05;
    let (smooth, r) = smooth_foliated_homeo_2d(&h, Foliation2D::horizontal(), Foliation2D::horizontal(), eps)?;
    for s in &r.stages {
        println!(
            "{:<6} {:>4} simplices  max dist {:.2e} (tol {:.2e})  min leaf d {:.3}",
            s.stage, s.simplices, s.max_distance, s.tolerance, s.min_leaf_derivative
        );
    }
    println!(
        "d_C0 = {:.2e}, tangent defect = {:.2e}, min Jacobian = {:.3}, attempts {}",
        r.d_c0, r.tangent_defect, r.min_jacobian, r.attempts
    );
    let p = [0.25, 0.4];
    println!("h({p:?}) = {:?}, h~({p:?}) = {:?}", h.eval(p), smooth.eval(p));
    Ok(())
}
