//! Sampled audit of every shipped nonlinearity: cocoercivity, the
//! pointwise bound `Psi(r) r >= alpha~ Psi(r)^2`, Lipschitz and coercivity
//! constants.

use levy_pme::psi::verify_psi_inequalities;
use levy_pme::{Nonlinearity, PsiKind};

fn main() -> levy_pme::Result<()> {
    println!("{:<14} {:>6} {:>12} {:>12} {:>10} {:>12}", "kind", "k", "cocoercive", "pointwise", "max slope", "coercivity");
    for kind in PsiKind::shipped() {
        let psi = Nonlinearity::new(kind)?;
        let rep = verify_psi_inequalities(&psi, 20_000, (-20.0, 20.0), 1)?;
        println!(
            "{:<14} {:>6.2} {:>12.3e} {:>12.3e} {:>10.4} {:>12}",
            rep.kind,
            psi.lipschitz(),
            rep.cocoercive_slack + 0.0,
            rep.pointwise_slack + 0.0,
            rep.max_slope,
            rep.coercivity_slack.map(|c| format!("{c:.3e}")).unwrap_or_else(|| "-".into())
        );
    }
    Ok(())
}
