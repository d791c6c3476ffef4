//! Seeded property checks over randomized inputs.

use nalgebra::DMatrix;
use proptest::collection::vec;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

use pssc::association::{build_association, build_soft_assignment, compute_omega, compute_probabilities};
use pssc::kmeans::kmeans;
use pssc::metrics::{best_label_matching, misclassification, ssr_error};
use pssc::solver::RepresentationSolver;
use pssc::spectral::{normalized_laplacian, spectral_embed};
use pssc::{run, AssociationMatrix, DataMatrix, HyperParams};

use super::{
    exhaustive_agreement, kkt_violation, omega_double_loop, orthogonal_blocks, product_triple_loop, rng, wcss,
};

pub struct Invariant {
    pub name: &'static str,
    pub cases: u32,
    check: fn(&mut TestRunner) -> Result<(), String>,
}

impl Invariant {
    /// Runs the check with a runner seeded from the invariant's name.
    pub fn run(&self) -> Result<(), String> {
        let mut seed = [0u8; 32];
        for (i, b) in self.name.bytes().enumerate() {
            seed[i % 32] ^= b;
        }
        let config = Config {
            cases: self.cases,
            failure_persistence: None,
            ..Config::default()
        };
        let mut runner = TestRunner::new_with_rng(config, TestRng::from_seed(RngAlgorithm::ChaCha, &seed));
        (self.check)(&mut runner)
    }
}

pub fn find(name: &str) -> &'static Invariant {
    ALL.iter().find(|i| i.name == name).expect("known invariant")
}

pub const ALL: &[Invariant] = &[
    Invariant {
        name: "phi_rows_on_simplex",
        cases: 2000,
        check: phi_rows_on_simplex,
    },
    Invariant {
        name: "omega_in_unit_interval",
        cases: 2000,
        check: omega_in_unit_interval,
    },
    Invariant {
        name: "association_symmetric_in_range",
        cases: 1500,
        check: association_symmetric_in_range,
    },
    Invariant {
        name: "probabilities_rows_sum_to_one",
        cases: 1000,
        check: probabilities_rows_sum_to_one,
    },
    Invariant {
        name: "coefficients_zero_diagonal_and_optimal",
        cases: 1000,
        check: coefficients_zero_diagonal_and_optimal,
    },
    Invariant {
        name: "misclassification_relabel_invariant",
        cases: 1500,
        check: misclassification_relabel_invariant,
    },
    Invariant {
        name: "hungarian_matches_exhaustive",
        cases: 1000,
        check: hungarian_matches_exhaustive,
    },
    Invariant {
        name: "ssr_column_scale_invariant",
        cases: 1000,
        check: ssr_column_scale_invariant,
    },
    Invariant {
        name: "laplacian_spectrum_in_range",
        cases: 500,
        check: laplacian_spectrum_in_range,
    },
    Invariant {
        name: "kmeans_labels_consistent",
        cases: 500,
        check: kmeans_labels_consistent,
    },
    Invariant {
        name: "orthogonal_blocks_fixed_point",
        cases: 200,
        check: orthogonal_blocks_fixed_point,
    },
];

fn report<T: std::fmt::Debug>(r: Result<(), proptest::test_runner::TestError<T>>) -> Result<(), String> {
    r.map_err(|e| e.to_string())
}

/// Row-stochastic `n x c` matrices with `c` in 2..=5.
fn prob_matrix(max_rows: usize) -> impl Strategy<Value = DMatrix<f64>> {
    (2usize..=5, 1usize..=max_rows).prop_flat_map(|(c, n)| {
        vec(vec(0.0f64..1.0, c), n).prop_map(move |rows| {
            DMatrix::from_fn(n, c, |i, k| {
                let total: f64 = rows[i].iter().sum();
                if total > 0.0 {
                    rows[i][k] / total
                } else {
                    1.0 / c as f64
                }
            })
        })
    })
}

fn phi_rows_on_simplex(runner: &mut TestRunner) -> Result<(), String> {
    report(runner.run(&(prob_matrix(20), 0.0f64..=1.0), |(p, omega)| {
        let sa = build_soft_assignment(&p, omega);
        for i in 0..p.nrows() {
            let row = sa.phi.row(i);
            prop_assert!(row.iter().all(|&v| v >= 0.0));
            prop_assert!((row.sum() - 1.0).abs() < 1e-12);
            if sa.certain[i] {
                prop_assert_eq!(row.iter().filter(|&&v| v == 1.0).count(), 1);
                prop_assert_eq!(row.iter().filter(|&&v| v == 0.0).count(), p.ncols() - 1);
            } else {
                prop_assert_eq!(row.into_owned(), p.row(i).into_owned());
            }
        }
        prop_assert_eq!(sa.kappa, sa.certain.iter().filter(|c| !**c).count());
        Ok(())
    }))
}

fn omega_in_unit_interval(runner: &mut TestRunner) -> Result<(), String> {
    report(runner.run(&prob_matrix(30), |p| {
        let omega = compute_omega(&p).unwrap();
        prop_assert!((0.0..=1.0).contains(&omega));
        prop_assert!((omega - omega_double_loop(&p).clamp(0.0, 1.0)).abs() < 1e-10);
        Ok(())
    }))
}

fn association_symmetric_in_range(runner: &mut TestRunner) -> Result<(), String> {
    report(runner.run(&(prob_matrix(15), 0.0f64..=1.0), |(p, omega)| {
        let sa = build_soft_assignment(&p, omega);
        let a = build_association(&sa).a;
        prop_assert_eq!(&a, &a.transpose());
        prop_assert!(a.iter().all(|&v| (-1e-15..=1.0 + 1e-12).contains(&v)));
        prop_assert!((a - product_triple_loop(&sa.phi)).abs().max() < 1e-10);
        Ok(())
    }))
}

/// Symmetric nonnegative `n x n` matrix with zero diagonal and sparse entries.
fn similarity(max_n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    (2usize..=max_n).prop_flat_map(|n| {
        vec(prop_oneof![Just(0.0f64), 0.0f64..2.0], n * n).prop_map(move |v| {
            let mut w = DMatrix::from_fn(n, n, |i, j| v[i.min(j) * n + i.max(j)]);
            w.fill_diagonal(0.0);
            w
        })
    })
}

fn probabilities_rows_sum_to_one(runner: &mut TestRunner) -> Result<(), String> {
    let strategy = (similarity(12), 2usize..=4).prop_flat_map(|(w, c)| {
        let n = w.nrows();
        (Just(w), Just(c), vec(0..c, n))
    });
    report(runner.run(&strategy, |(w, c, labels)| {
        let pr = compute_probabilities(&w, &labels, c).unwrap();
        for i in 0..w.nrows() {
            prop_assert!(pr.p.row(i).iter().all(|&v| (0.0..=1.0).contains(&v)));
            prop_assert!((pr.p.row(i).sum() - 1.0).abs() < 1e-12);
            prop_assert_eq!(pr.zero_mass.contains(&i), w.column(i).iter().all(|&v| v == 0.0));
        }
        Ok(())
    }))
}

fn coefficients_zero_diagonal_and_optimal(runner: &mut TestRunner) -> Result<(), String> {
    let strategy = (2usize..=6, 3usize..=10, any::<u64>(), 0.02f64..0.5, 0.01f64..10.0);
    report(runner.run(&strategy, |(dim, n, seed, l0, ratio)| {
        let mut r = rng(seed);
        let x = super::unit_columns(dim, n, &mut r);
        let data = DataMatrix::new(x.clone()).unwrap();
        let a = {
            let raw = DMatrix::from_fn(n, n, |_, _| rand::Rng::random::<f64>(&mut r));
            let mut a = (&raw + raw.transpose()) * 0.5;
            a.fill_diagonal(1.0);
            a
        };
        let l1 = l0 * ratio;
        let solver = RepresentationSolver::with_lambdas(&data, l0, l1, 1e-12, 100_000);
        let (state, _) = solver.solve(&AssociationMatrix { a: a.clone() }, None).unwrap();
        for i in 0..n {
            prop_assert_eq!(state.z[(i, i)], 0.0);
            let w: Vec<f64> = a.column(i).iter().map(|v| 1.0 - v).collect();
            let z: Vec<f64> = state.z.column(i).iter().copied().collect();
            prop_assert!(kkt_violation(&x, i, &w, l0, l1, &z) < 1e-6);
        }
        prop_assert_eq!(&state.zbar, &state.zbar.transpose());
        prop_assert!(state.zbar.iter().all(|&v| v >= 0.0));
        Ok(())
    }))
}

fn labelings() -> impl Strategy<Value = (usize, Vec<usize>, Vec<usize>)> {
    (2usize..=6, 1usize..=40).prop_flat_map(|(c, n)| (Just(c), vec(0..c, n), vec(0..c, n)))
}

fn misclassification_relabel_invariant(runner: &mut TestRunner) -> Result<(), String> {
    let strategy = labelings().prop_flat_map(|(c, pred, truth)| {
        let perm = Just((0..c).collect::<Vec<usize>>()).prop_shuffle();
        (Just(c), Just(pred), Just(truth), perm.clone(), perm)
    });
    report(runner.run(&strategy, |(c, pred, truth, pp, pt)| {
        let base = misclassification(&pred, &truth, c).unwrap();
        let pred2: Vec<usize> = pred.iter().map(|&l| pp[l]).collect();
        let truth2: Vec<usize> = truth.iter().map(|&l| pt[l]).collect();
        prop_assert_eq!(base, misclassification(&pred2, &truth, c).unwrap());
        prop_assert_eq!(base, misclassification(&pred, &truth2, c).unwrap());
        prop_assert!(base <= 1.0 - 1.0 / c as f64 + 1e-12);
        Ok(())
    }))
}

fn hungarian_matches_exhaustive(runner: &mut TestRunner) -> Result<(), String> {
    report(runner.run(&labelings(), |(c, pred, truth)| {
        let (perm, agreement) = best_label_matching(&pred, &truth, c).unwrap();
        prop_assert_eq!(agreement, exhaustive_agreement(&pred, &truth, c));
        let achieved = pred.iter().zip(&truth).filter(|(&p, &t)| perm[p] == t).count();
        prop_assert_eq!(achieved, agreement);
        Ok(())
    }))
}

fn ssr_column_scale_invariant(runner: &mut TestRunner) -> Result<(), String> {
    let strategy = (2usize..=10, 2usize..=3).prop_flat_map(|(n, c)| {
        (
            vec(prop_oneof![Just(0.0f64), -1.0f64..1.0], n * n),
            vec(0..c, n),
            vec(0.01f64..100.0, n),
            Just(c),
        )
    });
    report(runner.run(&strategy, |(entries, truth, scales, c)| {
        let n = truth.len();
        let mut z = DMatrix::from_column_slice(n, n, &entries);
        z.fill_diagonal(0.0);
        let base = ssr_error(&z, &truth, c).unwrap();
        prop_assert!((0.0..=1.0).contains(&base));
        for (j, s) in scales.iter().enumerate() {
            z.column_mut(j).scale_mut(*s);
        }
        prop_assert!((base - ssr_error(&z, &truth, c).unwrap()).abs() < 1e-12);
        Ok(())
    }))
}

fn laplacian_spectrum_in_range(runner: &mut TestRunner) -> Result<(), String> {
    report(runner.run(&similarity(8), |w| {
        let n = w.nrows();
        let emb = spectral_embed(&normalized_laplacian(&w), n).unwrap();
        prop_assert!(emb.eigenvalues.iter().all(|&e| (-1e-10..=2.0 + 1e-10).contains(&e)));
        Ok(())
    }))
}

fn kmeans_labels_consistent(runner: &mut TestRunner) -> Result<(), String> {
    let strategy = (2usize..=4, 6usize..=25, 1usize..=3)
        .prop_flat_map(|(k, n, d)| (Just(k), Just(d), vec(vec(-5.0f64..5.0, d), n), any::<u64>()));
    report(runner.run(&strategy, |(k, d, points, seed)| {
        let m = DMatrix::from_fn(points.len(), d, |i, j| points[i][j]);
        let fit = kmeans(&m, k, seed, 3);
        prop_assert!(fit.labels.iter().all(|&l| l < k));
        prop_assert!((fit.wcss - wcss(&points, &fit.labels, k)).abs() < 1e-9 * (1.0 + fit.wcss));
        // Lloyd's fixed point: no point is strictly closer to another centroid.
        for (i, p) in points.iter().enumerate() {
            let dist = |c: &Vec<f64>| p.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
            let own = dist(&fit.centroids[fit.labels[i]]);
            prop_assert!(fit.centroids.iter().all(|c| own <= dist(c) + 1e-9));
        }
        Ok(())
    }))
}

fn orthogonal_blocks_fixed_point(runner: &mut TestRunner) -> Result<(), String> {
    let strategy = (2usize..=3, 2usize..=3, 4usize..=8, any::<u64>());
    report(runner.run(&strategy, |(c, dim, per, seed)| {
        let (x, truth) = orthogonal_blocks(c, dim, per, &mut rng(seed));
        let data = DataMatrix::new(x).unwrap();
        let params = HyperParams {
            seed,
            kmeans_restarts: 5,
            ..HyperParams::default()
        };
        let result = run(&data, c, &params).unwrap();
        prop_assert_eq!(result.assignment.kappa, 0);
        prop_assert_eq!(result.assignment.omega, 1.0);
        prop_assert_eq!(misclassification(&result.labels, &truth, c).unwrap(), 0.0);
        Ok(())
    }))
}
