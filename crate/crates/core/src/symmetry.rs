//! Cospectral partners of Hermitian matrices whose off-diagonal support is
//! bipartite.
//!
//! Split `H = T + K` into its diagonal `T` and off-diagonal `K`. If the
//! graph of nonzero `K` entries admits a two-coloring `c`, then
//! `Λ = diag(c)` satisfies `ΛTΛ = T` and `ΛKΛ = −K`, so `L = T − K = ΛHΛ`
//! has the same spectrum as `H`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{hermitian_eig, ComplexMatrix, NumericsError};

/// Default support threshold relative to the largest off-diagonal
/// magnitude.
pub const RELATIVE_THRESHOLD: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SymmetryError {
    #[error("support threshold must be positive, got {0}")]
    InvalidThreshold(f64),
    #[error("matrix must be square, got {0}x{1}")]
    NotSquare(usize, usize),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportGraph {
    pub vertices: usize,
    /// `(i, j)` with `i < j`.
    pub edges: Vec<(usize, usize)>,
}

impl SupportGraph {
    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertices];
        for &(i, j) in &self.edges {
            adj[i].push(j);
            adj[j].push(i);
        }
        adj
    }
}

/// Edges over index pairs whose off-diagonal magnitude exceeds
/// `threshold` (absolute).
pub fn support_graph(h: &ComplexMatrix, threshold: f64) -> Result<SupportGraph, SymmetryError> {
    if !h.is_square() {
        return Err(SymmetryError::NotSquare(h.rows(), h.cols()));
    }
    if !(threshold > 0.0) {
        return Err(SymmetryError::InvalidThreshold(threshold));
    }
    let n = h.rows();
    let edges = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .filter(|&(i, j)| h[(i, j)].norm().max(h[(j, i)].norm()) > threshold)
        .collect();
    Ok(SupportGraph { vertices: n, edges })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coloring {
    /// `±1` per vertex; the first vertex of every component gets `+1`.
    Bipartite(Vec<i8>),
    /// Vertices of an odd cycle, in order.
    OddCycle(Vec<usize>),
}

fn path_to_root(mut v: usize, parent: &[Option<usize>]) -> Vec<usize> {
    let mut path = vec![v];
    while let Some(p) = parent[v] {
        path.push(p);
        v = p;
    }
    path
}

/// Breadth-first two-coloring.
pub fn two_color(graph: &SupportGraph) -> Coloring {
    let adj = graph.adjacency();
    let n = graph.vertices;
    let mut color: Vec<i8> = vec![0; n];
    let mut parent: Vec<Option<usize>> = vec![None; n];
    for root in 0..n {
        if color[root] != 0 {
            continue;
        }
        color[root] = 1;
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if color[v] == 0 {
                    color[v] = -color[u];
                    parent[v] = Some(u);
                    queue.push_back(v);
                } else if color[v] == color[u] {
                    let pu = path_to_root(u, &parent);
                    let pv = path_to_root(v, &parent);
                    let lca = *pu.iter().find(|x| pv.contains(x)).expect("same BFS tree");
                    let mut cycle: Vec<usize> = pu.iter().copied().take_while(|&x| x != lca).collect();
                    cycle.push(lca);
                    let tail: Vec<usize> = pv.iter().copied().take_while(|&x| x != lca).collect();
                    cycle.extend(tail.into_iter().rev());
                    return Coloring::OddCycle(cycle);
                }
            }
        }
    }
    Coloring::Bipartite(color)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CospectralityReport {
    pub threshold: f64,
    pub graph: SupportGraph,
    pub bipartite: bool,
    pub coloring: Option<Vec<i8>>,
    pub odd_cycle: Option<Vec<usize>>,
    /// `L = T − K`.
    pub partner: Option<ComplexMatrix>,
    /// `max |sorted eig(H) − sorted eig(L)|`.
    pub spectral_deviation: Option<f64>,
}

/// `Λ A Λ` for `Λ = diag(signs)`.
pub fn conjugate_by_signs(a: &ComplexMatrix, signs: &[i8]) -> ComplexMatrix {
    ComplexMatrix::from_fn(a.rows(), a.cols(), |i, j| a[(i, j)] * f64::from(signs[i] * signs[j]))
}

/// `T − K`: the matrix with its off-diagonal part negated.
pub fn negate_off_diagonal(h: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix::from_fn(h.rows(), h.cols(), |i, j| if i == j { h[(i, j)] } else { -h[(i, j)] })
}

/// Threshold used when none is given.
pub fn default_threshold(h: &ComplexMatrix) -> f64 {
    (RELATIVE_THRESHOLD * h.max_off_diagonal()).max(f64::MIN_POSITIVE)
}

pub fn cospectral_partner(h: &ComplexMatrix, threshold: Option<f64>) -> Result<CospectralityReport, SymmetryError> {
    let threshold = threshold.unwrap_or_else(|| default_threshold(h));
    let graph = support_graph(h, threshold)?;
    let base = hermitian_eig(h)?.eigenvalues;
    Ok(match two_color(&graph) {
        Coloring::Bipartite(signs) => {
            let partner = conjugate_by_signs(h, &signs);
            let other = hermitian_eig(&partner)?.eigenvalues;
            let deviation = base.iter().zip(&other).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            CospectralityReport {
                threshold,
                graph,
                bipartite: true,
                coloring: Some(signs),
                odd_cycle: None,
                partner: Some(partner),
                spectral_deviation: Some(deviation),
            }
        }
        Coloring::OddCycle(cycle) => CospectralityReport {
            threshold,
            graph,
            bipartite: false,
            coloring: None,
            odd_cycle: Some(cycle),
            partner: None,
            spectral_deviation: None,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const PRINTED: [[f64; 3]; 3] = [
        [-2.85404, 0.0, 0.130671],
        [0.0, -1.91238, -0.323568],
        [0.130671, -0.323568, -0.760916],
    ];

    fn graph(n: usize, edges: &[(usize, usize)]) -> SupportGraph {
        SupportGraph {
            vertices: n,
            edges: edges.to_vec(),
        }
    }

    #[test]
    fn diagonal_has_no_edges() {
        let g = support_graph(&ComplexMatrix::diagonal(&[1.0, 2.0, 3.0]), 1e-10).unwrap();
        assert!(g.edges.is_empty());
    }

    #[test]
    fn companion_support_is_a_path() {
        let g = support_graph(&ComplexMatrix::from_real_rows(&PRINTED), 1e-6).unwrap();
        assert_eq!(g.edges, vec![(0, 2), (1, 2)]);
    }

    #[test]
    fn full_matrix_is_a_triangle() {
        let g = support_graph(
            &ComplexMatrix::from_real_rows(&[[0.0, 1.0, 1.0], [1.0, 0.0, 1.0], [1.0, 1.0, 0.0]]),
            1e-6,
        )
        .unwrap();
        assert_eq!(g.edges, vec![(0, 1), (0, 2), (1, 2)]);
        assert!(support_graph(&ComplexMatrix::identity(2), 0.0).is_err());
    }

    #[test]
    fn coloring_cases() {
        assert_eq!(
            two_color(&graph(4, &[(0, 1), (1, 2), (2, 3)])),
            Coloring::Bipartite(vec![1, -1, 1, -1])
        );
        assert_eq!(two_color(&graph(3, &[])), Coloring::Bipartite(vec![1, 1, 1]));
        match two_color(&graph(3, &[(0, 1), (0, 2), (1, 2)])) {
            Coloring::OddCycle(mut c) => {
                c.sort_unstable();
                assert_eq!(c, vec![0, 1, 2]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn odd_cycle_witness_is_a_cycle() {
        // pentagon with a pendant vertex
        let g = graph(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (0, 4), (2, 5)]);
        let Coloring::OddCycle(c) = two_color(&g) else { panic!() };
        assert_eq!(c.len() % 2, 1);
        for k in 0..c.len() {
            let (a, b) = (c[k].min(c[(k + 1) % c.len()]), c[k].max(c[(k + 1) % c.len()]));
            assert!(g.edges.contains(&(a, b)), "{c:?}");
        }
    }

    #[test]
    fn companion_partner() {
        let h = ComplexMatrix::from_real_rows(&PRINTED);
        let r = cospectral_partner(&h, Some(1e-6)).unwrap();
        assert!(r.bipartite);
        assert!(r.spectral_deviation.unwrap() < 1e-12);
        assert!(r.partner.unwrap().max_abs_diff(&negate_off_diagonal(&h)) < 1e-15);
    }

    #[test]
    fn no_coupling_gives_identical_partner() {
        let h = ComplexMatrix::diagonal(&[0.5, -1.0, 2.0, 3.0]);
        let r = cospectral_partner(&h, None).unwrap();
        assert_eq!(r.partner.unwrap(), h);
    }

    fn random_tree_hermitian(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
        let mut h = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            h[(i, i)] = Complex64::new(rng.gen_range(-3.0..3.0), 0.0);
        }
        for v in 1..n {
            let u = rng.gen_range(0..v);
            let z = Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            h[(u, v)] = z;
            h[(v, u)] = z.conj();
        }
        h
    }

    #[test]
    fn tree_support_sweep() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let n = rng.gen_range(3..=8);
            let h = random_tree_hermitian(&mut rng, n);
            let r = cospectral_partner(&h, None).unwrap();
            assert!(r.bipartite);
            assert!(r.spectral_deviation.unwrap() < 1e-10);
            let signs = r.coloring.unwrap();
            let t = ComplexMatrix::from_fn(n, n, |i, j| if i == j { h[(i, j)] } else { Complex64::new(0.0, 0.0) });
            let k = &h - &t;
            assert_eq!(conjugate_by_signs(&t, &signs), t);
            assert_eq!(conjugate_by_signs(&k, &signs), k.scale_real(-1.0));
        }
    }

    #[test]
    fn triangle_support_breaks_cospectrality() {
        let h = ComplexMatrix::from_real_rows(&[[0.3, 1.0, 0.7], [1.0, -0.2, 0.4], [0.7, 0.4, 0.9]]);
        let r = cospectral_partner(&h, None).unwrap();
        assert!(!r.bipartite && r.partner.is_none());
        let a = hermitian_eig(&h).unwrap().eigenvalues;
        let b = hermitian_eig(&negate_off_diagonal(&h)).unwrap().eigenvalues;
        let dev = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(dev > 1e-3);
    }

    #[test]
    fn report_serializes() {
        let r = cospectral_partner(&ComplexMatrix::from_real_rows(&PRINTED), Some(1e-6)).unwrap();
        let text = serde_json::to_string(&r).unwrap();
        let back: CospectralityReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
    }
}
