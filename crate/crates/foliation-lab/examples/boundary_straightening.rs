//! Straighten a Liouville collar to C alpha at the boundary, and show that a
//! too small C fails at the third stage.

use foliation_lab::liouville::{straighten_boundary, CollarGamma, CollarModel, CollarSpec};
use foliation_lab::LabError;

fn main() -> foliation_lab::Result<()> {
    let spec = CollarSpec { n_m: 8, n_t: 17, gamma: CollarGamma::Dz(0.9), ..CollarSpec::default() };
    let m = CollarModel::standard(&spec)?;
    let (_, rep) = straighten_boundary(&m, None)?;
    println!("searched C = {:.3}, boundary defect {:.1e}", rep.c, rep.boundary_defect);
    for st in &rep.stages {
        let worst = st.stations.iter().map(|s| s.min_symplectic).fold(f64::INFINITY, f64::min);
        println!("stage {}: {} stations, min dl^dl/vol {:.4}, pass {}", st.name, st.stations.len(), worst, st.pass);
    }
    match straighten_boundary(&m, Some(1.01)) {
        Err(LabError::Stage { stage, detail }) => println!("C = 1.01: stage {stage} fails ({detail})"),
        other => println!("C = 1.01: unexpected {:?}", other.map(|r| r.1.pass)),
    }
    Ok(())
}
