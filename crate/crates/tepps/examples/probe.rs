use tepps::solver::{simplex_solve, LpStatus};
fn main() {
    env_logger::init();
    let study = tepps::cases::rts24_study(0.0, 0.0);
    let model = tepps::formulation::build_single_level_milp(&study).unwrap();
    let mut lp = model.problem.lp.clone();
    for &b in &model.problem.binaries {
        lp.lower[b] = 0.0;
        lp.upper[b] = 0.0;
    }
    match simplex_solve(&lp) {
        Ok(sol) => {
            println!("fixed-binary LP: {:?} obj {} iters {}", sol.status, sol.objective, sol.iterations);
            if sol.status == LpStatus::Optimal {
                let cert = sol.certificate(&lp);
                println!("cert {:?}", cert);
            }
        }
        Err(e) => println!("error: {e}"),
    }
    // unfixed root for comparison
    match simplex_solve(&model.problem.lp) {
        Ok(root) => {
            println!("root LP: {:?} obj {} iters {}", root.status, root.objective, root.iterations);
            let cert = root.certificate(&model.problem.lp);
            println!("root cert {:?}", cert);
        }
        Err(e) => println!("root error: {e}"),
    }
}
