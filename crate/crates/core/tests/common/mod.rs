#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use stealthlp::attack::{AttackProblem, Scenario};
use stealthlp::lti::{close_loop, is_stable, pulse_response, ClosedLoopMaps, GeneralizedPlant, Matrix, StateSpaceModel};

pub fn rand_matrix(rng: &mut StdRng, r: usize, c: usize, scale: f64) -> Matrix {
    Matrix::from_fn(r, c, |_, _| rng.gen_range(-scale..scale))
}

/// Infinity-norm `rho`, so spectral radius at most `rho`.
pub fn contractive(rng: &mut StdRng, n: usize, rho: f64) -> Matrix {
    let a = rand_matrix(rng, n, n, 1.0);
    let norm = (0..n).map(|i| a.row(i).iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    a * (rho / norm.max(1e-12))
}

pub fn random_plant(rng: &mut StdRng, n: usize, d_yu: bool) -> GeneralizedPlant {
    let rho = rng.gen_range(0.3..0.9);
    GeneralizedPlant::from_blocks(
        contractive(rng, n, rho),
        rand_matrix(rng, n, 1, 1.0),
        rand_matrix(rng, n, 1, 1.0),
        rand_matrix(rng, 1, n, 1.0),
        rand_matrix(rng, 1, n, 1.0),
        rand_matrix(rng, 1, 1, 0.5),
        Matrix::zeros(1, 1),
        rand_matrix(rng, 1, 1, 0.5),
        if d_yu { rand_matrix(rng, 1, 1, 0.3) } else { Matrix::zeros(1, 1) },
    )
    .unwrap()
}

pub fn random_controller(rng: &mut StdRng) -> StateSpaceModel {
    StateSpaceModel::scalar(
        rng.gen_range(-0.5..0.5),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-0.5..0.5),
        rng.gen_range(-0.3..0.3),
    )
}

pub fn random_loop(seed: u64) -> ClosedLoopMaps {
    let mut rng = StdRng::seed_from_u64(seed);
    loop {
        let n = rng.gen_range(3..=5);
        let plant = random_plant(&mut rng, n, false);
        let k = random_controller(&mut rng);
        let maps = close_loop(&plant, &k).unwrap();
        if is_stable(&maps.phi_zd).unwrap() {
            return maps;
        }
    }
}

pub fn problem(
    maps: &ClosedLoopMaps,
    scenario: Scenario,
    t_a: usize,
    t_zd: usize,
    t_psi_d: usize,
    theta: f64,
    alpha: f64,
) -> AttackProblem {
    let h = t_a + t_zd.max(t_psi_d);
    AttackProblem::new(
        pulse_response(&maps.phi_zd, h),
        pulse_response(&maps.phi_psi_d, h),
        t_a,
        t_zd,
        t_psi_d,
        &[theta],
        alpha,
        scenario,
    )
    .unwrap()
}

pub fn data_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}
