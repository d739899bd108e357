//! Forms on the 3-torus: the standard contact form, its differential, and
//! the operator identities on refining cube grids.

use std::sync::Arc;

use foliation_lab::contact::contact_sign;
use foliation_lab::fields::{operator_identities, FormField, LineField, ModelManifold};

fn main() -> foliation_lab::Result<()> {
    let m = Arc::new(ModelManifold::torus3(16)?);
    let tau = 2.0 * std::f64::consts::PI;
    // cos(2 pi z) dx - sin(2 pi z) dy, a positive contact form
    let alpha = FormField::from_fn(m.clone(), 1, |c| vec![(tau * c[2]).cos(), -(tau * c[2]).sin(), 0.0]);
    let da = alpha.exterior_derivative()?;
    let sign = contact_sign(&alpha)?;
    println!("alpha ^ d alpha / vol in [{:.4}, {:.4}], positive: {}", sign.min, sign.max, sign.is_positive());

    let x = LineField::from_fn(m, |_| vec![0.0, 0.0, 1.0])?;
    println!("max |i_X i_X d alpha| = {:.1e}", x.interior_product(&x.interior_product(&da)?)?.max_abs());

    let ids = operator_identities(&[12, 24, 48])?;
    println!("{:>4} {:>10} {:>10} {:>10}", "n", "|dd f|", "|dd a|", "|df - f'|");
    for l in &ids.levels {
        println!("{:>4} {:>10.2e} {:>10.2e} {:>10.2e}", l.n, l.dd_function, l.dd_one_form, l.d_error);
    }
    println!("derivative order {:.2}, identities hold: {}", ids.d_order, ids.pass);
    Ok(())
}
