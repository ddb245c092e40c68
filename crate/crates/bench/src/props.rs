//! Seeded property suites run by the `props` subcommand.

use std::fmt;

use sfp_core::mappings::{
    average, estimate_demicontractive_modulus, fixed_point_residual, verify_quasi_nonexpansive,
};
use sfp_core::sampling::{gaussian_vector, seeded, uniform, SeededRng};
use sfp_core::solver::{f_value, grad_f};
use sfp_core::{BoundedLinearMap, ConvexSet, DomainSampler, MappingSpec, SfpProblem, Vector};

use crate::problems::{generate_random_sfp, SetFamily};

pub const PROJECTION_TOL: f64 = 1e-10;
pub const GRADIENT_REL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyOutcome {
    pub name: String,
    /// Worst observed value of the checked quantity.
    pub worst: f64,
    pub tol: f64,
}

impl PropertyOutcome {
    pub fn passed(&self) -> bool {
        self.worst <= self.tol
    }
}

impl fmt::Display for PropertyOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<44} worst {:.3e} (tol {:.0e})",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.worst,
            self.tol
        )
    }
}

fn outcome(name: impl Into<String>, worst: f64, tol: f64) -> PropertyOutcome {
    PropertyOutcome {
        name: name.into(),
        worst,
        tol,
    }
}

fn random_matrix(rng: &mut SeededRng, rows: usize, cols: usize) -> BoundedLinearMap {
    let data = gaussian_vector(rng, rows * cols, 1.0).into_vec();
    BoundedLinearMap::new(rows, cols, data).expect("finite gaussian entries")
}

/// One seeded instance of every set kind in dimension `dim`.
pub fn sample_sets(dim: usize, seed: u64) -> Vec<ConvexSet> {
    let mut rng = seeded(seed);
    let center = gaussian_vector(&mut rng, dim, 1.0);
    let widths = gaussian_vector(&mut rng, dim, 1.0).map(f64::abs);
    let normal = gaussian_vector(&mut rng, dim, 1.0);
    let offset = uniform(&mut rng, -1.0, 1.0);
    let radius = uniform(&mut rng, 0.5, 2.0);
    let nullspace_rows = (dim / 2).max(1);
    vec![
        ConvexSet::boxed(&center - &widths, &center + &widths).expect("ordered bounds"),
        ConvexSet::ball(center.clone(), radius).expect("positive radius"),
        ConvexSet::halfspace(normal.clone(), offset).expect("nonzero normal"),
        ConvexSet::hyperplane(normal, offset).expect("nonzero normal"),
        ConvexSet::singleton(center),
        ConvexSet::affine_nullspace(random_matrix(&mut rng, nullspace_rows, dim)),
        ConvexSet::whole_space(dim),
    ]
}

/// Idempotence, nonexpansiveness, firm nonexpansiveness and the variational
/// characterization `⟨x − P_C x, y − P_C x⟩ ≤ 0` for every set kind.
pub fn projection_suite(seed: u64, samples: usize) -> Vec<PropertyOutcome> {
    const DIM: usize = 4;
    let mut out = Vec::new();
    for set in sample_sets(DIM, seed) {
        let mut rng = seeded(seed ^ 0x9e37_79b9);
        let members = set.sample_points(samples, seed.wrapping_add(1), 2.0);
        let (mut idem, mut nonexp, mut firm, mut charac) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for y in members.iter().take(samples) {
            let x = gaussian_vector(&mut rng, DIM, 3.0);
            let z = gaussian_vector(&mut rng, DIM, 3.0);
            let px = set.project(&x).expect("dimension matches");
            let pz = set.project(&z).expect("dimension matches");
            idem = idem.max(set.project(&px).expect("dimension matches").distance(&px));
            let d_in = x.distance(&z);
            let d_out = px.distance(&pz);
            nonexp = nonexp.max(d_out - d_in);
            firm = firm.max(d_out * d_out - (&px - &pz).dot(&(&x - &z)));
            charac = charac.max((&x - &px).dot(&(y - &px)));
        }
        let kind = set.kind_name();
        out.push(outcome(format!("projection/{kind}/idempotent"), idem, PROJECTION_TOL));
        out.push(outcome(format!("projection/{kind}/nonexpansive"), nonexp, PROJECTION_TOL));
        out.push(outcome(format!("projection/{kind}/firmly-nonexpansive"), firm, PROJECTION_TOL));
        out.push(outcome(format!("projection/{kind}/characterization"), charac, PROJECTION_TOL));
    }
    out
}

/// `⟨Ax, y⟩ = ⟨x, A*y⟩` on random rectangular maps.
pub fn adjoint_suite(seed: u64, samples: usize) -> PropertyOutcome {
    let mut rng = seeded(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let rows = 1 + (uniform(&mut rng, 0.0, 5.99) as usize);
        let cols = 1 + (uniform(&mut rng, 0.0, 5.99) as usize);
        let a = random_matrix(&mut rng, rows, cols);
        let x = gaussian_vector(&mut rng, cols, 1.0);
        let y = gaussian_vector(&mut rng, rows, 1.0);
        let lhs = a.apply(&x).expect("dims").dot(&y);
        let rhs = x.dot(&a.apply_adjoint(&y).expect("dims"));
        worst = worst.max((lhs - rhs).abs() / (1.0 + lhs.abs()));
    }
    outcome("linear/adjoint-identity", worst, 1e-12)
}

fn central_difference(problem: &SfpProblem, x: &Vector, i: usize, h: f64) -> f64 {
    let mut plus = x.as_slice().to_vec();
    let mut minus = plus.clone();
    plus[i] += h;
    minus[i] -= h;
    let fp = f_value(problem, &Vector::new(plus).expect("finite")).expect("dims");
    let fm = f_value(problem, &Vector::new(minus).expect("finite")).expect("dims");
    (fp - fm) / (2.0 * h)
}

/// Gradient against central differences, and the `‖A‖²`-Lipschitz bound.
pub fn gradient_suite(seed: u64, samples: usize) -> Vec<PropertyOutcome> {
    let mut rel = 0.0f64;
    let mut lip = f64::NEG_INFINITY;
    for (k, family) in SetFamily::ALL.into_iter().cycle().take(5).enumerate() {
        let inst_seed = seed.wrapping_add(k as u64);
        let problem = generate_random_sfp(4, 3, family, inst_seed).expect("valid dims");
        let l = problem.a().operator_norm(1e-12, 10_000).expect("power iteration");
        let mut rng = seeded(inst_seed ^ 0x5bd1_e995);
        for _ in 0..samples {
            let x = gaussian_vector(&mut rng, 4, 3.0);
            let g = grad_f(&problem, &x).expect("dims");
            let fd = Vector::new(
                (0..4)
                    .map(|i| central_difference(&problem, &x, i, 1e-6))
                    .collect(),
            )
            .expect("finite");
            let scale = g.norm().max(1e-8);
            rel = rel.max(g.distance(&fd) / scale);
            let y = gaussian_vector(&mut rng, 4, 3.0);
            let gy = grad_f(&problem, &y).expect("dims");
            lip = lip.max(g.distance(&gy) - (l * l + 1e-8) * x.distance(&y));
        }
    }
    vec![
        outcome("gradient/central-differences", rel, GRADIENT_REL_TOL),
        outcome("gradient/lipschitz", lip.max(0.0), 0.0),
    ]
}

/// The one-dimensional demicontractive example: modulus `2/3`, not
/// quasi-nonexpansive, with `S_{0.25}` quasi-nonexpansive.
pub fn mapping_suite() -> Vec<PropertyOutcome> {
    let t = MappingSpec::example_2_2();
    let star = Vector::from_slice(&[7.0 / 8.0]).expect("finite");
    let grid = DomainSampler::Grid1D {
        lo: 0.0,
        hi: 1.0,
        step: 1e-4,
    };
    let k = estimate_demicontractive_modulus(&t, &star, &grid, usize::MAX, 0).expect("fixed point");
    let qne = verify_quasi_nonexpansive(&t, &star, &grid, usize::MAX, 0).expect("fixed point");
    let averaged = average(&t, 0.25).expect("lambda in (0, 1]");
    let qne_avg =
        verify_quasi_nonexpansive(&averaged, &star, &grid, usize::MAX, 0).expect("fixed point");
    let fix = fixed_point_residual(&averaged, &star).expect("dims");
    vec![
        outcome("mapping/modulus-estimate", (k - 2.0 / 3.0).abs(), 1e-3),
        outcome("mapping/not-quasi-nonexpansive", (qne.max_slack - 0.5).abs(), 1e-12),
        outcome("mapping/averaged-quasi-nonexpansive", qne_avg.max_slack.max(0.0), 1e-10),
        outcome("mapping/averaged-keeps-fixed-point", fix, 1e-15),
    ]
}

pub fn run_all(seed: u64, samples: usize) -> Vec<PropertyOutcome> {
    let mut out = projection_suite(seed, samples);
    out.push(adjoint_suite(seed, samples));
    out.extend(gradient_suite(seed, samples.min(100)));
    out.extend(mapping_suite());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_pass_on_small_samples() {
        for o in run_all(3, 50) {
            assert!(o.passed(), "{o}");
        }
    }

    #[test]
    fn every_set_kind_is_covered() {
        let kinds: Vec<_> = sample_sets(3, 0).iter().map(|s| s.kind_name()).collect();
        assert_eq!(kinds.len(), 7);
        let mut unique = kinds.clone();
        unique.dedup();
        assert_eq!(unique.len(), 7);
    }
}
