//! The cat-map suspension: defining pair, bicontact pair and linear
//! Liouville pair, compared with their closed forms.

use foliation_lab::anosov::{defining_pair, liouville_pair, mitsumatsu_bicontact, SuspensionAnosov};

fn main() -> foliation_lab::Result<()> {
    let flow = SuspensionAnosov::new([[2, 1], [1, 1]], 32, 32)?;
    let (pair, dp) = defining_pair(&flow)?;
    println!("log lambda = {:.6}, rates r_s = {:.6}, r_u = {:.6}", flow.log_lambda(), dp.r_s, dp.r_u);

    let (_, mr) = mitsumatsu_bicontact(&pair, &[1e-2, 1e-3])?;
    for e in &mr.entries {
        println!("delta {:<6} ratio in [{:.6}, {:.6}], signs ok {}", e.delta, e.ratio_min, e.ratio_max, e.signs_ok);
    }
    for delta in [0.02, 0.05, 0.1] {
        let r = liouville_pair(&pair, delta, 17)?.report;
        println!(
            "delta {delta:<5} min dl^dl/vol = {:.6} (8 delta log lambda = {:.6}), max rel err {:.1e}",
            r.min_ratio, r.expected_min, r.max_rel_error
        );
    }
    Ok(())
}
