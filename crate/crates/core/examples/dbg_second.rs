use vortex2d::asymptotics::*;
use vortex2d::evolution::{run, SimConfig};
use vortex2d::field::WeightSpec;
use vortex2d::grid::Grid;
use vortex2d::profiles::NamedProfile;

fn main() {
    let g = Grid::new(128, 12.0).unwrap();
    let t0 = std::time::Instant::now();
    let (psi2, psi3) = psi_profiles(g).unwrap();
    let r2 = resolvent_solve(&psi2).unwrap();
    let r3 = resolvent_solve(&psi3).unwrap();
    println!("resolvents took {:.1?}", t0.elapsed());

    let corpus: Vec<(&str, vortex2d::field::RealField)> = vec![
        ("b=(.05,.05)+g2", NamedProfile::F1.field(g).scale(0.05)
            .add_scaled(0.05, &NamedProfile::F2.field(g))
            .add_scaled(0.01, &NamedProfile::H2.field(g))),
        ("b=(.06,-.03)+g13", NamedProfile::F1.field(g).scale(0.06)
            .add_scaled(-0.03, &NamedProfile::F2.field(g))
            .add_scaled(0.01, &NamedProfile::H1.field(g))
            .add_scaled(-0.008, &NamedProfile::H3.field(g))),
        ("b=(.04,.07)+K", NamedProfile::F1.field(g).scale(0.04)
            .add_scaled(0.07, &NamedProfile::F2.field(g))
            .add_scaled(0.05, &NamedProfile::K.field(g))),
    ];
    let w4 = WeightSpec::new(4.0).unwrap();
    for (name, w0) in corpus {
        let cfg = SimConfig { snapshot_every: Some(0.1), ..SimConfig::suggested(g, 5.0) };
        let t0 = std::time::Instant::now();
        let traj = run(&w0, &cfg).unwrap();
        let (b, c) = estimate_profile_coefficients(&traj);
        let profile = AsymptoticProfile::second_with_parts(b, c, g, r2.clone(), r3.clone());
        let fit = profile_residual_fit(&traj, &profile, w4, (2.0, 5.0)).unwrap();
        println!("{name}: rate = {:.4} (need <= -1.0), residual {:.2e}, b = {:?}, c = {:?} [{:.0?}]",
            fit.rate, fit.residual, b, c, t0.elapsed());
        // without resolvent parts, for comparison
        let p2 = AsymptoticProfile::second_with_parts(b, c, g,
            vortex2d::field::RealField::zeros(g), vortex2d::field::RealField::zeros(g));
        let fit2 = profile_residual_fit(&traj, &p2, w4, (2.0, 5.0)).unwrap();
        println!("   without resolvent parts: rate = {:.4}", fit2.rate);
    }
}
