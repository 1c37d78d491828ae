mod common;

use proptest::prelude::*;

use stealthlp::attack::{self, build_row_lp, verify_attack, AttackStatus, RowSet, Scenario, SolveOptions};
use stealthlp::lp;
use stealthlp::simkit::{detect, simulate};

use common::{problem, random_loop};

const TOL: f64 = 1e-9;

fn windows() -> impl Strategy<Value = (u64, usize, usize, usize, f64, f64)> {
    (any::<u64>(), 0usize..=12, 0usize..=6, 0usize..=6, 0.2f64..2.0, 0.5f64..3.0)
}

fn mu(p: &stealthlp::attack::AttackProblem) -> f64 {
    attack::solve(p).unwrap().mu
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn stealth_during_dominates_stealth_always((seed, t_a, t_zd, t_psi, theta, alpha) in windows()) {
        let maps = random_loop(seed);
        let m1 = mu(&problem(&maps, Scenario::StealthAlways, t_a, t_zd, t_psi, theta, alpha));
        let m2 = mu(&problem(&maps, Scenario::StealthDuring, t_a, t_zd, t_psi, theta, alpha));
        prop_assert!(m2 >= m1 - TOL, "S2 {} < S1 {}", m2, m1);
    }

    #[test]
    fn restricted_rows_equal_full_rows((seed, t_a, t_zd, t_psi, theta, alpha) in windows()) {
        let maps = random_loop(seed);
        for s in [Scenario::StealthDuring, Scenario::ImpactDuring] {
            let (tz, tp) = if s == Scenario::ImpactDuring { (0, 0) } else { (t_zd, t_psi) };
            let p = problem(&maps, s, t_a, tz, tp, theta, alpha);
            let full = attack::solve_with(&p, &SolveOptions { rows: RowSet::Full, skip_dominated: false, ..Default::default() }).unwrap();
            prop_assert!((full.mu - mu(&p)).abs() <= TOL);
        }
    }

    #[test]
    fn negated_rows_give_equal_values((seed, t_a, t_zd, t_psi, theta, alpha) in windows()) {
        let maps = random_loop(seed);
        let p = problem(&maps, Scenario::StealthAlways, t_a, t_zd, t_psi, theta, alpha);
        for n in [0, t_a, t_a + t_zd] {
            let mut row = build_row_lp(&p, n, 0, p.stealth_end()).unwrap();
            let plus = lp::solve(&row).unwrap().value;
            let neg: Vec<f64> = row.objective().iter().map(|c| -c).collect();
            row.maximize(neg);
            let minus = lp::solve(&row).unwrap().value;
            prop_assert!((plus - minus).abs() <= TOL * plus.abs().max(1.0), "row {}: {} vs {}", n, plus, minus);
        }
    }

    #[test]
    fn positive_homogeneity((seed, t_a, t_zd, t_psi, theta, alpha) in windows(), c in 0.1f64..20.0) {
        let maps = random_loop(seed);
        for s in [Scenario::StealthAlways, Scenario::StealthDuring] {
            let m = mu(&problem(&maps, s, t_a, t_zd, t_psi, theta, alpha));
            let mc = mu(&problem(&maps, s, t_a, t_zd, t_psi, c * theta, c * alpha));
            prop_assert!((mc - c * m).abs() <= TOL * (c * m).max(1.0));
        }
    }

    #[test]
    fn monotone_in_theta_alpha_and_duration((seed, t_a, t_zd, t_psi, theta, alpha) in windows(), g in 1.0f64..3.0) {
        let maps = random_loop(seed);
        for s in [Scenario::StealthAlways, Scenario::StealthDuring] {
            let m = mu(&problem(&maps, s, t_a, t_zd, t_psi, theta, alpha));
            for bigger in [
                problem(&maps, s, t_a, t_zd, t_psi, g * theta, alpha),
                problem(&maps, s, t_a, t_zd, t_psi, theta, g * alpha),
                problem(&maps, s, t_a + 1, t_zd, t_psi, theta, alpha),
            ] {
                prop_assert!(mu(&bigger) >= m - TOL * m.max(1.0));
            }
        }
    }

    #[test]
    fn solutions_replay_stealthily((seed, t_a, t_zd, t_psi, theta, alpha) in windows()) {
        let maps = random_loop(seed);
        for s in [Scenario::StealthAlways, Scenario::StealthDuring, Scenario::ImpactDuring] {
            let (tz, tp) = if s == Scenario::ImpactDuring { (0, 0) } else { (t_zd, t_psi) };
            let p = problem(&maps, s, t_a, tz, tp, theta, alpha);
            let sol = attack::solve(&p).unwrap();
            prop_assert_eq!(sol.status, AttackStatus::Bounded);
            verify_attack(&p, &sol).unwrap();
            let traj = simulate(&maps, &sol.d_hat, p.window_len() - 1).unwrap();
            let det = detect(&traj.psi, p.theta(), p.stealth_end()).unwrap();
            prop_assert!(det.margin >= -1e-6);
            let impact = (0..=p.impact_end()).map(|n| traj.z.sample(n)[0].abs()).fold(0.0, f64::max);
            prop_assert!((impact - sol.mu).abs() <= 1e-6);
        }
    }

    #[test]
    fn parallel_rows_match_sequential((seed, t_a, t_zd, t_psi, theta, alpha) in windows()) {
        let maps = random_loop(seed);
        let p = problem(&maps, Scenario::StealthAlways, t_a, t_zd, t_psi, theta, alpha);
        let seq = attack::solve(&p).unwrap();
        let par = attack::solve_with(&p, &SolveOptions { jobs: 4, ..Default::default() }).unwrap();
        prop_assert_eq!(seq, par);
    }
}

#[test]
fn delayed_attack_shifts_impact() {
    // Delaying the worst attack by one step is feasible for t_a + 1 and shifts z.
    let maps = random_loop(7);
    let p = problem(&maps, Scenario::StealthAlways, 6, 4, 4, 1.0, 1.5);
    let sol = attack::solve(&p).unwrap();
    let q = problem(&maps, Scenario::StealthAlways, 7, 4, 4, 1.0, 1.5);
    let delayed = sol.d_hat.delayed(1);
    let r0 = attack::replay_attack(&p, &sol.d_hat).unwrap();
    let r1 = attack::replay_attack(&q, &delayed).unwrap();
    assert!(r1.first_violation.is_none());
    assert!((r1.max_z - r0.max_z).abs() < 1e-12);
    assert_eq!(r1.impact_time, r0.impact_time + 1);
}

#[test]
fn stealth_during_may_alarm_after_the_attack() {
    let mut found = false;
    for seed in 0..40 {
        let maps = random_loop(seed);
        let p = problem(&maps, Scenario::StealthDuring, 5, 8, 8, 0.5, 2.0);
        let sol = attack::solve(&p).unwrap();
        let traj = simulate(&maps, &sol.d_hat, p.window_len() - 1).unwrap();
        assert!(detect(&traj.psi, p.theta(), p.t_a()).unwrap().margin >= -1e-9);
        let late = (p.t_a() + 1..p.window_len()).any(|t| traj.psi.sample(t).iter().any(|v| v.abs() > 0.5 + 1e-6));
        found |= late;
    }
    assert!(found, "no instance alarmed after the attack window");
}
