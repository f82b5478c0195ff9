//! Projections onto ℓ2/ℓ∞ group balls and the proximal step built on them.

use sglig::prox::{
    active_groups, project_group_two_stage, project_intersection, prox_regularizer, GroupRadii, ProjectorKind,
};

fn main() -> sglig::Result<()> {
    // one group: the two-stage rule is feasible but not the nearest point
    let h = [2.0, 0.5];
    let one = GroupRadii::new(2, vec![vec![0, 1]], vec![0.7], vec![0.6])?;
    let two_stage = project_group_two_stage(&h, 0.7, 0.6);
    let exact = project_intersection(&h, &one, &[0], &ProjectorKind::dykstra())?;
    println!("h = {h:?}");
    println!("  two-stage  {:.5?}", two_stage);
    println!("  exact      {:.5?}", exact);

    // overlapping groups {0,1} and {1,2}
    let radii = GroupRadii::new(3, vec![vec![0, 1], vec![1, 2]], vec![1.0, 1.0], vec![0.75, 0.75])?;
    let h = [2.0, 2.0, 2.0];
    let active = active_groups(&h, &radii);
    for (name, kind) in [("pocs", ProjectorKind::pocs()), ("dykstra", ProjectorKind::dykstra())] {
        let x = project_intersection(&h, &radii, &active, &kind)?;
        println!("{name:<8} {:.5?}  infeasibility {:.1e}", x, radii.infeasibility(&x, &active));
    }

    let out = prox_regularizer(&[3.0, 0.1, -2.0], &radii, &ProjectorKind::dykstra())?;
    println!("prox of (3, 0.1, -2): beta {:.4?}, active groups {:?}", out.beta, out.active);
    Ok(())
}
