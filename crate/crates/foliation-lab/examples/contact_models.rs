//! Local contact models near a closed leafwise orbit: ribbon holonomy on
//! random coefficients and on the annulus, and the pull-down profile.

use foliation_lab::contact::{
    annulus_holonomy, pulldown_profile, random_coefficients, ribbon_holonomy, AnnulusModel, BumpFamily,
    LinearWindow, PulldownSpec,
};
use foliation_lab::numeric::rng;

fn main() -> foliation_lab::Result<()> {
    let mut r = rng(1);
    for i in 0..4 {
        let path = random_coefficients(&mut r, i % 2 == 0);
        let c = ribbon_holonomy(&path, 5.0)?;
        println!(
            "pair {i}: |a - a_ode| {:.1e}, |b - b_ode| {:.1e}, growth margin {:.3} on {} samples",
            c.max_err_a, c.max_err_b, c.growth_min_margin, c.growth_checked
        );
    }
    let a = annulus_holonomy(&AnnulusModel::default(), [8, 17, 9], 0.1, 5.0)?;
    println!("annulus: collar angle below {} by s* = {:?}, monotone {}", a.angle_target, a.s_star, a.monotone);

    let psi = BumpFamily::single(0.05, 0.8);
    let w = LinearWindow { level: 0.45, slope: 1.0, wobble: 0.0 };
    let rep = pulldown_profile(&psi, &w, &PulldownSpec::default())?;
    println!("pull-down: eps = {}, tried {:?}", rep.eps, rep.tried);
    for reg in &rep.regions {
        println!("  {:<24} min margin {:.3e} over {} samples", reg.region, reg.min_margin, reg.samples);
    }
    println!("  homotopy conditions pass: {}", rep.homotopy.pass);
    Ok(())
}
