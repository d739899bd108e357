//! Smooth a kinked increasing function, then again with prescribed collar data.

use foliation_lab::smoothing::{smooth_increasing, smooth_increasing_relative, CollarData, MonotoneFunction};

fn main() -> foliation_lab::Result<()> {
    // slopes 0.2 then 1.8, kink at 1/2
    let v = MonotoneFunction::from_fn(33, |z| if z < 0.5 { 0.2 * z } else { 0.1 + 1.8 * (z - 0.5) })?;
    let eps = 0.01;
    let s = smooth_increasing(&v, eps)?;
    let r = &s.report;
    println!(
        "free: sup |v~ - v| = {:.3e} < {eps}, v~' in [{:.3}, {:.3}], endpoints exact: {}",
        r.sup_distance,
        r.min_derivative,
        r.max_derivative,
        r.endpoint_defect == 0.0
    );

    // collar data: a finer free smoothing, kept only near the ends
    let fine = smooth_increasing(&v, eps / 4.0)?;
    let data = CollarData::new(0.1, move |z| fine.eval(z));
    let (rel, rep) = smooth_increasing_relative(&v, &data, eps)?;
    println!(
        "relative: sup = {:.3e} < {}, collar mismatches {}, ramp {:.4}",
        rep.monotone.sup_distance,
        2.0 * eps,
        rep.collar_mismatches,
        rel.ramp
    );
    for z in [0.0, 0.05, 0.5, 0.95, 1.0] {
        let (val, d) = rel.eval(z);
        println!("  z = {z:<5} v~ = {val:.6} v~' = {d:.4}");
    }
    Ok(())
}

