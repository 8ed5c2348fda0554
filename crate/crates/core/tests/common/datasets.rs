//! Fixed logistic datasets shared by the oracle tests and the acceptance run.
#![allow(dead_code)]

use dosefind::stats::{BinomialObservation, CovariateTransform};

pub struct Dataset {
    pub name: &'static str,
    pub transform: CovariateTransform,
    pub cells: Vec<BinomialObservation>,
}

fn obs(rows: &[(f64, u32, u32, f64)]) -> Vec<BinomialObservation> {
    rows.iter()
        .map(|&(x, y, n, w)| BinomialObservation::new(x, y, n).weighted(w))
        .collect()
}

pub fn logistic_datasets() -> Vec<Dataset> {
    use CovariateTransform::{Identity, NaturalLog};
    vec![
        Dataset { name: "three doses, mg", transform: Identity, cells: obs(&[(100.0, 2, 10, 1.0), (200.0, 5, 10, 1.0), (400.0, 8, 10, 1.0)]) },
        Dataset { name: "escalation log dose", transform: NaturalLog, cells: obs(&[(100.0, 0, 3, 1.0), (200.0, 1, 3, 1.0), (400.0, 2, 3, 1.0)]) },
        Dataset { name: "exposure efficacy", transform: NaturalLog, cells: obs(&[(10.0, 1, 10, 1.0), (30.0, 5, 10, 1.0), (90.0, 9, 10, 1.0)]) },
        Dataset {
            name: "power weights 1/.75/.5/.5/.25",
            transform: Identity,
            cells: obs(&[
                (0.5, 12, 30, 1.0), (1.0, 20, 30, 1.0),
                (0.6, 9, 30, 0.75), (1.0, 15, 30, 0.75),
                (0.7, 8, 30, 0.5), (1.0, 14, 30, 0.5),
                (0.8, 9, 30, 0.5), (1.0, 12, 30, 0.5),
                (0.9, 6, 30, 0.25), (1.0, 8, 30, 0.25),
            ]),
        },
        Dataset { name: "four doses log", transform: NaturalLog, cells: obs(&[(50.0, 1, 6, 1.0), (100.0, 2, 6, 1.0), (200.0, 2, 6, 1.0), (400.0, 5, 6, 1.0)]) },
        Dataset { name: "weighted linear", transform: Identity, cells: obs(&[(1.0, 3, 20, 1.0), (2.0, 7, 20, 0.5), (3.0, 12, 20, 1.0), (4.0, 15, 20, 0.8)]) },
        Dataset { name: "two points", transform: Identity, cells: obs(&[(0.5, 9, 30, 1.0), (1.0, 18, 30, 1.0)]) },
        Dataset {
            name: "five doses weighted log",
            transform: NaturalLog,
            cells: obs(&[(25.0, 0, 5, 0.3), (50.0, 1, 5, 0.6), (100.0, 1, 5, 1.0), (200.0, 3, 5, 1.0), (400.0, 4, 5, 0.8)]),
        },
        Dataset {
            name: "repeated covariates",
            transform: Identity,
            cells: obs(&[(250.0, 10, 30, 1.0), (500.0, 18, 30, 1.0), (300.0, 8, 30, 0.8), (500.0, 15, 30, 0.8)]),
        },
        Dataset { name: "decreasing", transform: Identity, cells: obs(&[(1.0, 8, 10, 1.0), (2.0, 5, 10, 1.0), (3.0, 3, 10, 1.0)]) },
    ]
}

/// `(t, responders, total, weight)` on the transformed scale.
pub fn oracle_cells(d: &Dataset) -> Vec<(f64, f64, f64, f64)> {
    d.cells
        .iter()
        .map(|o| (d.transform.apply(o.covariate), f64::from(o.responders), f64::from(o.total), o.weight))
        .collect()
}

/// Max-norm of the weighted score at `(a, b)` on the transformed scale.
pub fn score_norm(cells: &[(f64, f64, f64, f64)], a: f64, b: f64) -> f64 {
    let (mut s0, mut s1) = (0.0, 0.0);
    for &(t, y, n, w) in cells {
        let p = 1.0 / (1.0 + (-(a + b * t)).exp());
        s0 += w * (y - n * p);
        s1 += w * (y - n * p) * t;
    }
    s0.abs().max(s1.abs())
}

/// Completely or quasi-completely separated data, some weighted, on either
/// scale. Every one of these has no finite maximum likelihood estimate.
pub fn separable_datasets(count: usize, seed: u64) -> Vec<(CovariateTransform, Vec<BinomialObservation>)> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let k = rng.random_range(2..=6usize);
            let mut xs: Vec<f64> = Vec::new();
            let mut x = rng.random_range(10.0..100.0);
            for _ in 0..k {
                xs.push(x);
                x *= rng.random_range(1.2..2.5);
            }
            let cut = rng.random_range(0..=k);
            let quasi = i % 3 == 1 && cut > 0 && cut < k;
            let decreasing = i % 5 == 4;
            let cells = xs
                .iter()
                .enumerate()
                .map(|(j, &x)| {
                    let n = rng.random_range(1..=12u32);
                    let above = if decreasing { j < cut } else { j >= cut };
                    let y = if quasi && j == cut { rng.random_range(0..=n) } else if above { n } else { 0 };
                    let w = if i % 2 == 0 { 1.0 } else { rng.random_range(0.2..=1.0) };
                    BinomialObservation::new(x, y, n).weighted(w)
                })
                .collect();
            let transform = if i % 4 < 2 { CovariateTransform::NaturalLog } else { CovariateTransform::Identity };
            (transform, cells)
        })
        .collect()
}
