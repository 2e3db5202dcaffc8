//! Soft co-clustering of SO pairs and P phrases.
//!
//! The evidence matrix M (SO pairs x P phrases, entries = plausibility) is
//! factorized as M ~ U W V^T with non-negative factors and an orthonormality
//! penalty on U and V, solved by SGD over the stored entries only. Cluster
//! membership is thresholded relative to each factor column's maximum, and
//! hyperparameters are chosen by a sparsity-per-loss grid search.

use std::collections::HashMap;

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rank::ScoredTriple;

/// Sparse SO-by-P evidence matrix with dense, first-appearance-ordered
/// indices.
#[derive(Debug, Clone, Default)]
pub struct SopMatrix {
    pub so_pairs: Vec<(String, String)>,
    pub p_phrases: Vec<String>,
    pub entries: HashMap<(usize, usize), f64>,
}

impl SopMatrix {
    pub fn rows(&self) -> usize {
        self.so_pairs.len()
    }

    pub fn cols(&self) -> usize {
        self.p_phrases.len()
    }

    pub fn squared_norm(&self) -> f64 {
        self.entries.values().map(|v| v * v).sum()
    }

    /// Stored entries in deterministic (row, col) order.
    pub fn sorted_entries(&self) -> Vec<(usize, usize, f64)> {
        let mut entries: Vec<(usize, usize, f64)> = self
            .entries
            .iter()
            .map(|(&(i, j), &v)| (i, j, v))
            .collect();
        entries.sort_unstable_by_key(|&(i, j, _)| (i, j));
        entries
    }
}

/// Rows keyed by (s, o), columns by predicate phrase, entries summed
/// plausibility; zero-score triples are omitted.
pub fn build_so_p_matrix(triples: &[ScoredTriple]) -> SopMatrix {
    let mut matrix = SopMatrix::default();
    let mut row_index: HashMap<(String, String), usize> = HashMap::new();
    let mut col_index: HashMap<String, usize> = HashMap::new();
    for t in triples {
        if t.pi <= 0.0 {
            continue;
        }
        let so = (t.tuple.subject.clone(), t.tuple.object.clone());
        let row = *row_index.entry(so.clone()).or_insert_with(|| {
            matrix.so_pairs.push(so.clone());
            matrix.so_pairs.len() - 1
        });
        let col = *col_index
            .entry(t.tuple.predicate.clone())
            .or_insert_with(|| {
                matrix.p_phrases.push(t.tuple.predicate.clone());
                matrix.p_phrases.len() - 1
            });
        *matrix.entries.entry((row, col)).or_default() += t.pi;
    }
    matrix
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    /// Per-epoch multiplicative decay of the learning rate.
    pub learning_rate_decay: f64,
    pub ortho_weight: f64,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            epochs: 300,
            learning_rate: 0.05,
            learning_rate_decay: 0.002,
            ortho_weight: 0.1,
            seed: 42,
        }
    }
}

/// The factor triple U (m x k), W (k x l), V (n x l) with its loss history.
#[derive(Debug, Clone)]
pub struct TriFactorization {
    pub u: Array2<f64>,
    pub w: Array2<f64>,
    pub v: Array2<f64>,
    pub k: usize,
    pub l: usize,
    pub rho: f64,
    /// Data loss (sum of squared residuals over stored entries) per epoch.
    pub loss_trace: Vec<f64>,
}

impl TriFactorization {
    pub fn final_loss(&self) -> f64 {
        self.loss_trace.last().copied().unwrap_or(0.0)
    }

    /// Reconstruction of one stored cell.
    pub fn predict(&self, i: usize, j: usize) -> f64 {
        let wv: Array1<f64> = self.w.dot(&self.v.row(j));
        self.u.row(i).dot(&wv)
    }
}

fn init_sparse(rows: usize, cols: usize, rho: f64, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let mut m = Array2::zeros((rows, cols));
    for v in m.iter_mut() {
        if rng.random::<f64>() < rho {
            *v = rng.random::<f64>();
        }
    }
    m
}

fn data_loss(matrix: &[(usize, usize, f64)], u: &Array2<f64>, w: &Array2<f64>, v: &Array2<f64>) -> f64 {
    matrix
        .iter()
        .map(|&(i, j, value)| {
            let wv: Array1<f64> = w.dot(&v.row(j));
            let residual = value - u.row(i).dot(&wv);
            residual * residual
        })
        .sum()
}

fn clamp_non_negative(m: &mut Array2<f64>) {
    for v in m.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

/// Gradient of the orthonormality penalty ||A^T A - I||_F^2 is 4 A (A^T A - I).
fn ortho_step(a: &mut Array2<f64>, weight: f64, lr: f64) {
    if weight == 0.0 {
        return;
    }
    let k = a.ncols();
    let mut gram = a.t().dot(a);
    for d in 0..k {
        gram[(d, d)] -= 1.0;
    }
    let gradient = a.dot(&gram) * 4.0;
    a.scaled_add(-lr * weight, &gradient);
    clamp_non_negative(a);
}

/// SGD tri-factorization over the stored entries of a sparse non-negative
/// matrix. Factors start at density `rho`; non-negativity is kept by
/// clamping after every update. Divergence (non-finite loss) is an error.
pub fn tri_factorize(
    matrix: &SopMatrix,
    k: usize,
    l: usize,
    rho: f64,
    config: &SolverConfig,
) -> Result<TriFactorization> {
    if k == 0 || l == 0 {
        return Err(Error::Config("cluster counts k and l must be >= 1".into()));
    }
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::Config(format!("density rho must be in (0, 1], got {rho}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let m = matrix.rows();
    let n = matrix.cols();
    let mut u = init_sparse(m, k, rho, &mut rng);
    let mut w = init_sparse(k, l, rho, &mut rng);
    let mut v = init_sparse(n, l, rho, &mut rng);

    let entries = matrix.sorted_entries();
    let mut order: Vec<usize> = (0..entries.len()).collect();
    let mut loss_trace = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        let lr = config.learning_rate / (1.0 + config.learning_rate_decay * epoch as f64);
        // deterministic shuffle from the seeded generator
        for idx in (1..order.len()).rev() {
            order.swap(idx, rng.random_range(0..=idx));
        }
        for &e in &order {
            let (i, j, value) = entries[e];
            let vj = v.row(j).to_owned();
            let ui = u.row(i).to_owned();
            let wv: Array1<f64> = w.dot(&vj);
            let residual = value - ui.dot(&wv);
            let g = -2.0 * residual;

            // dL/dU_i = -2 r (W v_j)^T ; dL/dW = -2 r u_i v_j^T ; dL/dV_j = -2 r (u_i W)
            let uw: Array1<f64> = ui.dot(&w);
            {
                let mut row = u.row_mut(i);
                row.scaled_add(-lr * g, &wv);
                for x in row.iter_mut() {
                    if *x < 0.0 {
                        *x = 0.0;
                    }
                }
            }
            for a in 0..k {
                for b in 0..l {
                    let delta = -lr * g * ui[a] * vj[b];
                    let cell = &mut w[(a, b)];
                    *cell = (*cell + delta).max(0.0);
                }
            }
            {
                let mut row = v.row_mut(j);
                row.scaled_add(-lr * g, &uw);
                for x in row.iter_mut() {
                    if *x < 0.0 {
                        *x = 0.0;
                    }
                }
            }
        }
        ortho_step(&mut u, config.ortho_weight, lr);
        ortho_step(&mut v, config.ortho_weight, lr);

        let loss = data_loss(&entries, &u, &w, &v);
        if !loss.is_finite() {
            return Err(Error::Diverged {
                learning_rate: config.learning_rate,
            });
        }
        loss_trace.push(loss);
    }

    Ok(TriFactorization {
        u,
        w,
        v,
        k,
        l,
        rho,
        loss_trace,
    })
}

/// One soft cluster: member indices with their membership weights.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SoftCluster {
    pub members: Vec<(usize, f64)>,
}

/// Thresholded cluster assignment plus SO-to-P cluster couplings.
#[derive(Debug, Clone)]
pub struct CoClustering {
    pub so_clusters: Vec<SoftCluster>,
    pub p_clusters: Vec<SoftCluster>,
    /// (so_cluster, p_cluster, W value) for every coupling above epsilon.
    pub couplings: Vec<(usize, usize, f64)>,
    pub delta: f64,
}

pub const DEFAULT_DELTA: f64 = 0.1;
pub const COUPLING_EPSILON: f64 = 1e-6;

fn threshold_columns(factor: &Array2<f64>, delta: f64) -> Vec<SoftCluster> {
    (0..factor.ncols())
        .map(|c| {
            let column = factor.column(c);
            let max = column.iter().cloned().fold(0.0f64, f64::max);
            let theta = delta * max;
            let members = column
                .iter()
                .enumerate()
                .filter(|&(_, &w)| w > 0.0 && w >= theta)
                .map(|(i, &w)| (i, w))
                .collect();
            SoftCluster { members }
        })
        .collect()
}

/// Per cluster, keep members whose weight reaches delta times the column
/// maximum; couple SO cluster mu to P cluster nu where W exceeds epsilon.
pub fn threshold_clusters(factorization: &TriFactorization, delta: f64) -> CoClustering {
    let so_clusters = threshold_columns(&factorization.u, delta);
    let p_clusters = threshold_columns(&factorization.v, delta);
    let mut couplings = Vec::new();
    for mu in 0..factorization.w.nrows() {
        for nu in 0..factorization.w.ncols() {
            let w = factorization.w[(mu, nu)];
            if w > COUPLING_EPSILON {
                couplings.push((mu, nu, w));
            }
        }
    }
    CoClustering {
        so_clusters,
        p_clusters,
        couplings,
        delta,
    }
}

pub const ZERO_EPSILON: f64 = 1e-6;
pub const LOSS_EPSILON: f64 = 1e-9;

/// Fraction of W entries below the zero threshold.
pub fn w_zero_fraction(factorization: &TriFactorization) -> f64 {
    let total = factorization.w.len();
    if total == 0 {
        return 0.0;
    }
    let zeros = factorization.w.iter().filter(|&&x| x < ZERO_EPSILON).count();
    zeros as f64 / total as f64
}

/// Grid-search objective: fraction of near-zero W entries per unit of data
/// loss. Higher is better.
pub fn sparsity_score(factorization: &TriFactorization) -> f64 {
    w_zero_fraction(factorization) / (factorization.final_loss() + LOSS_EPSILON)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridPoint {
    pub k: usize,
    pub l: usize,
    pub rho: f64,
    pub score: f64,
    pub final_loss: f64,
    pub w_zero_fraction: f64,
}

#[derive(Debug)]
pub struct GridSearchOutcome {
    pub best: TriFactorization,
    pub evaluated: Vec<GridPoint>,
}

/// Factorize at every (k, l, rho) grid point and keep the argmax of the
/// sparsity score; ties go to the smaller (k, l).
pub fn grid_search(
    matrix: &SopMatrix,
    k_grid: &[usize],
    l_grid: &[usize],
    rho_grid: &[f64],
    config: &SolverConfig,
) -> Result<GridSearchOutcome> {
    let mut points: Vec<(usize, usize, f64)> = Vec::new();
    for &k in k_grid {
        for &l in l_grid {
            for &rho in rho_grid {
                points.push((k, l, rho));
            }
        }
    }
    if points.is_empty() {
        return Err(Error::Config("empty hyperparameter grid".into()));
    }
    points.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)).then(a.2.total_cmp(&b.2)));

    let mut best: Option<(f64, TriFactorization)> = None;
    let mut evaluated = Vec::with_capacity(points.len());
    for (k, l, rho) in points {
        let factorization = tri_factorize(matrix, k, l, rho, config)?;
        let score = sparsity_score(&factorization);
        evaluated.push(GridPoint {
            k,
            l,
            rho,
            score,
            final_loss: factorization.final_loss(),
            w_zero_fraction: w_zero_fraction(&factorization),
        });
        // strict comparison in ascending (k, l) order: first max wins ties
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, factorization));
        }
    }
    let (_, best) = best.unwrap();
    Ok(GridSearchOutcome { best, evaluated })
}

/// Partition triples by a subject-to-domain map; unmapped subjects land in
/// the reserved "unknown" slice.
pub fn slice_by_domain(
    triples: Vec<ScoredTriple>,
    domain_map: &HashMap<String, String>,
) -> HashMap<String, Vec<ScoredTriple>> {
    let mut slices: HashMap<String, Vec<ScoredTriple>> = HashMap::new();
    for t in triples {
        let domain = domain_map
            .get(&t.tuple.subject)
            .cloned()
            .unwrap_or_else(|| "unknown".to_string());
        slices.entry(domain).or_default().push(t);
    }
    slices
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::normalize::{CandidateTuple, Negativity};

    fn scored(s: &str, p: &str, o: &str, pi: f64) -> ScoredTriple {
        ScoredTriple {
            tuple: CandidateTuple {
                subject: s.into(),
                predicate: p.into(),
                object: o.into(),
                modality: None,
                negativity: Negativity::Positive,
                source: "t".into(),
                score: pi,
            },
            pi,
            p_spo: 0.0,
            tau: 0.0,
            sigma: 0.0,
        }
    }

    fn matrix_from_dense(dense: &Array2<f64>) -> SopMatrix {
        let mut entries = HashMap::new();
        for ((i, j), &v) in dense.indexed_iter() {
            if v > 0.0 {
                entries.insert((i, j), v);
            }
        }
        SopMatrix {
            so_pairs: (0..dense.nrows()).map(|i| (format!("s{i}"), format!("o{i}"))).collect(),
            p_phrases: (0..dense.ncols()).map(|j| format!("p{j}")).collect(),
            entries,
        }
    }

    #[test]
    fn matrix_shape_from_triples() {
        let triples = vec![
            scored("lion", "hunt", "zebra", 0.5),
            scored("lion", "chase", "zebra", 0.4),
            scored("lion", "stalk", "zebra", 0.3),
        ];
        let m = build_so_p_matrix(&triples);
        assert_eq!(m.rows(), 1);
        assert_eq!(m.cols(), 3);
        assert_eq!(m.entries.len(), 3);
    }

    #[test]
    fn empty_input_builds_empty_matrix() {
        let m = build_so_p_matrix(&[]);
        assert_eq!(m.rows(), 0);
        assert_eq!(m.cols(), 0);
    }

    #[test]
    fn zero_scores_are_omitted_and_duplicates_sum() {
        let triples = vec![
            scored("lion", "hunt", "zebra", 0.5),
            scored("lion", "hunt", "zebra", 0.25),
            scored("cow", "eat", "grass", 0.0),
        ];
        let m = build_so_p_matrix(&triples);
        assert_eq!(m.rows(), 1);
        assert_eq!(m.cols(), 1);
        assert!((m.entries[&(0, 0)] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn hand_built_ten_triple_matrix() {
        let triples = vec![
            scored("fox", "scream at", "night", 0.9),
            scored("owl", "hoot at", "night", 0.8),
            scored("frog", "croak at", "night", 0.7),
            scored("fox", "hunt", "mouse", 0.6),
            scored("owl", "hunt", "mouse", 0.5),
            scored("cow", "eat", "grass", 0.4),
            scored("sheep", "eat", "grass", 0.3),
            scored("cow", "chew", "grass", 0.2),
            scored("frog", "eat", "fly", 0.1),
            scored("owl", "hoot at", "night", 0.05),
        ];
        let m = build_so_p_matrix(&triples);
        assert_eq!(m.rows(), 8);
        assert_eq!(m.cols(), 6);
        assert_eq!(m.so_pairs[0], ("fox".to_string(), "night".to_string()));
        assert_eq!(m.p_phrases[0], "scream at");
        // duplicate (owl hoot-at night) summed
        assert!((m.entries[&(1, 1)] - 0.85).abs() < 1e-12);
        assert_eq!(m.entries.len(), 9);
    }

    fn rank_one_matrix() -> (SopMatrix, f64) {
        // M = u w^T, 20 x 15, strictly positive factors
        let u: Vec<f64> = (0..20).map(|i| 0.3 + 0.07 * i as f64).collect();
        let w: Vec<f64> = (0..15).map(|j| 0.2 + 0.05 * j as f64).collect();
        let mut dense = Array2::zeros((20, 15));
        for i in 0..20 {
            for j in 0..15 {
                dense[(i, j)] = u[i] * w[j];
            }
        }
        let m = matrix_from_dense(&dense);
        let norm = m.squared_norm();
        (m, norm)
    }

    #[test]
    fn rank_one_matrix_is_recovered() {
        let (m, norm) = rank_one_matrix();
        let f = tri_factorize(&m, 1, 1, 0.8, &SolverConfig::default()).unwrap();
        assert!(
            f.final_loss() <= 1e-3 * norm,
            "loss {} vs bound {}",
            f.final_loss(),
            1e-3 * norm
        );
    }

    #[test]
    fn loss_moving_average_is_non_increasing_on_rank_one() {
        let (m, _) = rank_one_matrix();
        let f = tri_factorize(&m, 1, 1, 0.8, &SolverConfig::default()).unwrap();
        let trace = &f.loss_trace;
        let window = 5;
        let averages: Vec<f64> = trace
            .windows(window)
            .map(|w| w.iter().sum::<f64>() / window as f64)
            .collect();
        for pair in averages.windows(2) {
            assert!(
                pair[1] <= pair[0] + 1e-12,
                "moving average rose: {} -> {}",
                pair[0],
                pair[1]
            );
        }
    }

    #[test]
    fn factors_stay_non_negative() {
        let (m, _) = rank_one_matrix();
        // check after every epoch by re-running with increasing epoch counts
        for epochs in [1, 3, 10, 50] {
            let config = SolverConfig {
                epochs,
                ..SolverConfig::default()
            };
            let f = tri_factorize(&m, 2, 2, 0.5, &config).unwrap();
            let min = f
                .u
                .iter()
                .chain(f.w.iter())
                .chain(f.v.iter())
                .cloned()
                .fold(f64::INFINITY, f64::min);
            assert!(min >= 0.0, "negative factor entry after {epochs} epochs");
        }
    }

    #[test]
    fn zero_matrix_is_vacuous() {
        let m = SopMatrix {
            so_pairs: vec![("a".into(), "b".into())],
            p_phrases: vec!["p".into()],
            entries: HashMap::new(),
        };
        let f = tri_factorize(&m, 1, 1, 0.5, &SolverConfig::default()).unwrap();
        assert_eq!(f.final_loss(), 0.0);
    }

    #[test]
    fn fixed_seed_is_bit_identical() {
        let (m, _) = rank_one_matrix();
        let config = SolverConfig {
            epochs: 40,
            ..SolverConfig::default()
        };
        let a = tri_factorize(&m, 2, 2, 0.5, &config).unwrap();
        let b = tri_factorize(&m, 2, 2, 0.5, &config).unwrap();
        assert_eq!(a.u, b.u);
        assert_eq!(a.w, b.w);
        assert_eq!(a.v, b.v);
        assert_eq!(a.loss_trace, b.loss_trace);
    }

    #[test]
    fn bad_hyperparameters_are_config_errors() {
        let (m, _) = rank_one_matrix();
        assert!(tri_factorize(&m, 0, 1, 0.5, &SolverConfig::default()).is_err());
        assert!(tri_factorize(&m, 1, 1, 0.0, &SolverConfig::default()).is_err());
        assert!(tri_factorize(&m, 1, 1, 1.5, &SolverConfig::default()).is_err());
    }

    #[test]
    fn divergence_names_the_learning_rate() {
        let (m, _) = rank_one_matrix();
        let config = SolverConfig {
            learning_rate: 50.0,
            learning_rate_decay: 0.0,
            epochs: 50,
            ..SolverConfig::default()
        };
        match tri_factorize(&m, 2, 2, 0.9, &config) {
            Err(Error::Diverged { learning_rate }) => assert_eq!(learning_rate, 50.0),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    fn factorization_with_u(u: Array2<f64>, w: Array2<f64>, v: Array2<f64>) -> TriFactorization {
        TriFactorization {
            k: u.ncols(),
            l: v.ncols(),
            u,
            w,
            v,
            rho: 1.0,
            loss_trace: vec![0.0],
        }
    }

    #[test]
    fn threshold_matches_hand_arithmetic() {
        let u = Array2::from_shape_vec((3, 1), vec![0.9, 0.5, 0.05]).unwrap();
        let w = Array2::from_shape_vec((1, 1), vec![1.0]).unwrap();
        let v = Array2::from_shape_vec((2, 1), vec![1.0, 0.0]).unwrap();
        let f = factorization_with_u(u, w, v);
        let c = threshold_clusters(&f, 0.1);
        let members: Vec<usize> = c.so_clusters[0].members.iter().map(|&(i, _)| i).collect();
        // theta = 0.1 * 0.9 = 0.09; 0.05 stays out
        assert_eq!(members, vec![0, 1]);
    }

    #[test]
    fn all_zero_column_gives_empty_cluster() {
        let u = Array2::zeros((3, 1));
        let w = Array2::from_shape_vec((1, 1), vec![1.0]).unwrap();
        let v = Array2::from_shape_vec((2, 1), vec![1.0, 0.5]).unwrap();
        let f = factorization_with_u(u, w, v);
        let c = threshold_clusters(&f, 0.1);
        assert!(c.so_clusters[0].members.is_empty());
    }

    #[test]
    fn delta_one_keeps_argmax_and_ties() {
        let u = Array2::from_shape_vec((4, 1), vec![0.9, 0.9, 0.5, 0.1]).unwrap();
        let w = Array2::from_shape_vec((1, 1), vec![1.0]).unwrap();
        let v = Array2::from_shape_vec((1, 1), vec![1.0]).unwrap();
        let f = factorization_with_u(u, w, v);
        let c = threshold_clusters(&f, 1.0);
        let members: Vec<usize> = c.so_clusters[0].members.iter().map(|&(i, _)| i).collect();
        assert_eq!(members, vec![0, 1]);
    }

    #[test]
    fn membership_is_invariant_under_column_rescaling() {
        let u = Array2::from_shape_vec((3, 2), vec![0.9, 0.2, 0.5, 0.8, 0.05, 0.3]).unwrap();
        let w = Array2::from_shape_vec((2, 2), vec![0.7, 0.0, 0.0, 0.4]).unwrap();
        let v = Array2::from_shape_vec((2, 2), vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let f = factorization_with_u(u.clone(), w.clone(), v);

        // scale U's first column by c, W's first row by 1/c
        let c = 7.3;
        let mut u2 = u;
        let mut w2 = w;
        for i in 0..3 {
            u2[(i, 0)] *= c;
        }
        for j in 0..2 {
            w2[(0, j)] /= c;
        }
        let f2 = factorization_with_u(u2, w2, f.v.clone());

        let ids = |clusters: &[SoftCluster]| -> Vec<Vec<usize>> {
            clusters
                .iter()
                .map(|cl| cl.members.iter().map(|&(i, _)| i).collect())
                .collect()
        };
        assert_eq!(
            ids(&threshold_clusters(&f, 0.1).so_clusters),
            ids(&threshold_clusters(&f2, 0.1).so_clusters)
        );
    }

    #[test]
    fn sparsity_score_matches_hand_computation() {
        let u = Array2::from_shape_vec((2, 2), vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let w = Array2::from_shape_vec((2, 2), vec![0.5, 0.0, 0.0, 0.0]).unwrap();
        let v = Array2::from_shape_vec((2, 2), vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let mut f = factorization_with_u(u, w, v);
        f.loss_trace = vec![0.25];
        // 3 of 4 W entries below epsilon; score = 0.75 / (0.25 + 1e-9)
        let expected = 0.75 / (0.25 + LOSS_EPSILON);
        assert!((sparsity_score(&f) - expected).abs() < 1e-9);
    }

    fn planted_block_matrix() -> SopMatrix {
        // two SO groups coupled to two disjoint P groups
        let mut dense = Array2::zeros((12, 10));
        for i in 0..6 {
            for j in 0..5 {
                dense[(i, j)] = 0.8 + 0.04 * ((i + j) % 3) as f64;
            }
        }
        for i in 6..12 {
            for j in 5..10 {
                dense[(i, j)] = 0.7 + 0.05 * ((i * j) % 4) as f64;
            }
        }
        matrix_from_dense(&dense)
    }

    #[test]
    fn single_point_grid_returns_that_point() {
        let m = planted_block_matrix();
        let config = SolverConfig {
            epochs: 60,
            ..SolverConfig::default()
        };
        let out = grid_search(&m, &[2], &[2], &[0.5], &config).unwrap();
        assert_eq!(out.evaluated.len(), 1);
        assert_eq!(out.best.k, 2);
        assert_eq!(out.best.l, 2);
    }

    #[test]
    fn grid_search_recovers_the_planted_shape_in_most_seeded_runs() {
        let m = planted_block_matrix();
        let mut wins = 0;
        for seed in 0..10 {
            let config = SolverConfig {
                epochs: 120,
                seed,
                ..SolverConfig::default()
            };
            let out = grid_search(&m, &[2, 4], &[2, 4], &[0.5], &config).unwrap();
            if out.best.k == 2 && out.best.l == 2 {
                wins += 1;
            }
        }
        assert!(wins >= 8, "planted (2, 2) won only {wins}/10 runs");
    }

    #[test]
    fn rho_grid_reports_a_score_per_point() {
        let m = planted_block_matrix();
        let config = SolverConfig {
            epochs: 40,
            ..SolverConfig::default()
        };
        let out = grid_search(&m, &[2], &[2], &[0.10, 0.15], &config).unwrap();
        assert_eq!(out.evaluated.len(), 2);
        for point in &out.evaluated {
            assert!(point.score.is_finite());
            assert!(point.final_loss.is_finite());
        }
    }

    #[test]
    fn overlapping_predicate_senses_cluster_softly() {
        // "attack" is used both by predators (with prey) and by students
        // (with problems); the P phrase should join both clusters
        let triples = vec![
            scored("lion", "attack", "zebra", 0.9),
            scored("lion", "chase", "zebra", 0.8),
            scored("wolf", "attack", "deer", 0.85),
            scored("wolf", "chase", "deer", 0.75),
            scored("student", "attack", "problem", 0.9),
            scored("student", "solve", "problem", 0.95),
            scored("researcher", "attack", "problem", 0.8),
            scored("researcher", "solve", "problem", 0.85),
        ];
        let m = build_so_p_matrix(&triples);
        // a gentle orthonormality penalty: the hard default drives the tiny
        // V toward disjoint supports, which is exactly what softness is not
        let config = SolverConfig {
            epochs: 400,
            seed: 2,
            ortho_weight: 0.02,
            ..SolverConfig::default()
        };
        let f = tri_factorize(&m, 2, 2, 0.8, &config).unwrap();
        let clusters = threshold_clusters(&f, DEFAULT_DELTA);
        let attack = m.p_phrases.iter().position(|p| p == "attack").unwrap();
        let clusters_with_attack = clusters
            .p_clusters
            .iter()
            .filter(|c| c.members.iter().any(|&(j, _)| j == attack))
            .count();
        assert!(
            clusters_with_attack >= 2,
            "attack appears in {clusters_with_attack} cluster(s)"
        );
    }

    #[test]
    fn domain_slicing_partitions_by_subject() {
        let triples = vec![
            scored("lion", "hunt", "zebra", 0.5),
            scored("doctor", "help", "people", 0.6),
            scored("quark", "be", "small", 0.4),
        ];
        let mut map = HashMap::new();
        map.insert("lion".to_string(), "animal".to_string());
        map.insert("doctor".to_string(), "occupation".to_string());
        let slices = slice_by_domain(triples.clone(), &map);
        assert_eq!(slices["animal"].len(), 1);
        assert_eq!(slices["occupation"].len(), 1);
        assert_eq!(slices["unknown"].len(), 1);

        let all_unknown = slice_by_domain(triples, &HashMap::new());
        assert_eq!(all_unknown["unknown"].len(), 3);
    }
}
