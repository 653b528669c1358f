//! Tanner graphs, regular LDPC code generation, and GF(2) linear algebra.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum CodeError {
    #[error("invalid code parameters: {0}")]
    InvalidParameters(String),
    #[error("graph structure invalid: {0}")]
    InvalidGraph(String),
    #[error("could not reach girth 6 within the retry budget ({attempts} restarts)")]
    GirthBudgetExhausted { attempts: usize },
    #[error("check degree {degree} exceeds the enumeration cap {cap}")]
    DegreeAboveCap { degree: usize, cap: usize },
    #[error("no codeword with weight within {tol} of {target} found in {draws} draws")]
    WeightSearchExhausted { target: usize, tol: usize, draws: usize },
    #[error("codeword space dimension {dim} exceeds the enumeration cap {cap}")]
    DimensionAboveCap { dim: usize, cap: usize },
}

/// Bipartite variable/check adjacency of a binary linear code.
///
/// Adjacency lists are kept sorted; `(i, j)` appears at most once (parallel
/// edges are rejected at construction).
#[derive(Debug, Clone, PartialEq)]
pub struct TannerGraph {
    n: usize,
    m: usize,
    var_adj: Vec<Vec<usize>>,
    check_adj: Vec<Vec<usize>>,
}

impl TannerGraph {
    /// Builds a graph from per-check variable lists.
    pub fn from_checks(n: usize, checks: Vec<Vec<usize>>) -> Result<Self, CodeError> {
        let m = checks.len();
        let mut var_adj = vec![Vec::new(); n];
        let mut check_adj = vec![Vec::new(); m];
        for (j, members) in checks.into_iter().enumerate() {
            for i in members {
                if i >= n {
                    return Err(CodeError::InvalidGraph(format!(
                        "check {j} references variable {i} >= n = {n}"
                    )));
                }
                if check_adj[j].contains(&i) {
                    return Err(CodeError::InvalidGraph(format!(
                        "parallel edge between variable {i} and check {j}"
                    )));
                }
                check_adj[j].push(i);
                var_adj[i].push(j);
            }
        }
        for list in &mut var_adj {
            list.sort_unstable();
        }
        for list in &mut check_adj {
            list.sort_unstable();
        }
        Ok(Self { n, m, var_adj, check_adj })
    }

    /// Number of variables (block length).
    pub fn num_vars(&self) -> usize {
        self.n
    }

    /// Number of checks (parity-check matrix rows).
    pub fn num_checks(&self) -> usize {
        self.m
    }

    /// Checks adjacent to variable `i`, sorted.
    pub fn var_checks(&self, i: usize) -> &[usize] {
        &self.var_adj[i]
    }

    /// Variables adjacent to check `j`, sorted.
    pub fn check_vars(&self, j: usize) -> &[usize] {
        &self.check_adj[j]
    }

    pub fn num_edges(&self) -> usize {
        self.var_adj.iter().map(Vec::len).sum()
    }

    /// Position of check `j` within `var_checks(i)`.
    pub fn slot_of_check(&self, i: usize, j: usize) -> usize {
        self.var_adj[i].binary_search(&j).expect("edge must exist")
    }

    /// True if two distinct variables share two distinct checks.
    pub fn has_four_cycle(&self) -> bool {
        let mut seen: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for i in 0..self.n {
            let cs = &self.var_adj[i];
            for a in 0..cs.len() {
                for b in a + 1..cs.len() {
                    if seen.insert((cs[a], cs[b]), i).is_some() {
                        return true;
                    }
                }
            }
        }
        false
    }

    /// Code rate estimated from the GF(2) rank of the parity-check matrix.
    pub fn rank_rate(&self) -> f64 {
        let rank = Gf2Matrix::from_graph(self).rank();
        1.0 - rank as f64 / self.n as f64
    }
}

/// Parity check of `bits` against every row; `bits` must be 0/1 valued.
pub fn syndrome_ok(graph: &TannerGraph, bits: &[u8]) -> bool {
    assert_eq!(bits.len(), graph.num_vars(), "codeword length mismatch");
    (0..graph.num_checks()).all(|j| {
        graph.check_vars(j).iter().fold(0u8, |acc, &i| acc ^ (bits[i] & 1)) == 0
    })
}

/// Draws a `(dv, dc)`-regular Tanner graph with no parallel edges and girth
/// at least 6, by random edge-socket matching followed by violation-targeted
/// socket swaps (resampling on a retry budget).
pub fn generate_regular_code<R: Rng + ?Sized>(
    n: usize,
    dv: usize,
    dc: usize,
    rng: &mut R,
) -> Result<TannerGraph, CodeError> {
    if n == 0 || dv == 0 || dc == 0 {
        return Err(CodeError::InvalidParameters("n, dv, dc must be positive".into()));
    }
    if (n * dv) % dc != 0 {
        return Err(CodeError::InvalidParameters(format!(
            "n*dv = {} is not divisible by dc = {dc}",
            n * dv
        )));
    }
    let m = n * dv / dc;
    if dc > n {
        return Err(CodeError::InvalidParameters(format!("dc = {dc} exceeds n = {n}")));
    }
    let num_edges = n * dv;
    let var_of_edge: Vec<usize> = (0..num_edges).map(|k| k / dv).collect();
    const RESTARTS: usize = 40;
    const SWEEPS: usize = 400;
    for _ in 0..RESTARTS {
        let mut check_of_edge: Vec<usize> = (0..num_edges).map(|k| k / dc).collect();
        check_of_edge.shuffle(rng);
        let mut clean = false;
        for _ in 0..SWEEPS {
            let bad = violating_edges(n, &var_of_edge, &check_of_edge);
            if bad.is_empty() {
                clean = true;
                break;
            }
            for &k in &bad {
                let other = rng.random_range(0..num_edges);
                check_of_edge.swap(k, other);
            }
        }
        if clean {
            let mut checks = vec![Vec::new(); m];
            for k in 0..num_edges {
                checks[check_of_edge[k]].push(var_of_edge[k]);
            }
            let graph = TannerGraph::from_checks(n, checks)?;
            debug_assert!(!graph.has_four_cycle());
            return Ok(graph);
        }
    }
    Err(CodeError::GirthBudgetExhausted { attempts: RESTARTS })
}

/// Edge indices involved in a parallel edge or a 4-cycle under the current
/// socket assignment.
fn violating_edges(n: usize, var_of_edge: &[usize], check_of_edge: &[usize]) -> Vec<usize> {
    let mut per_var: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n]; // (check, edge id)
    for (k, (&i, &j)) in var_of_edge.iter().zip(check_of_edge).enumerate() {
        per_var[i].push((j, k));
    }
    let mut bad = Vec::new();
    let mut pair_seen: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for list in per_var.iter_mut() {
        list.sort_unstable();
        // Parallel edges: same (var, check) twice.
        for w in 1..list.len() {
            if list[w].0 == list[w - 1].0 {
                bad.push(list[w].1);
            }
        }
        // 4-cycles: a check pair repeated across two variables.
        for a in 0..list.len() {
            for b in a + 1..list.len() {
                if list[a].0 == list[b].0 {
                    continue;
                }
                let key = (list[a].0, list[b].0);
                if pair_seen.insert(key, list[b].1).is_some() {
                    bad.push(list[b].1);
                }
            }
        }
    }
    bad.sort_unstable();
    bad.dedup();
    bad
}

/// Even-cardinality subsets of one check's neighborhood, as bit masks over
/// positions in `check_vars(j)` (ascending mask order, `2^(d-1)` entries).
#[derive(Debug, Clone, PartialEq)]
pub struct EvenSubsetFamily {
    pub check: usize,
    pub degree: usize,
    pub masks: Vec<u32>,
}

/// Enumerates the even-subset family of check `j`, refusing degrees above
/// `degree_cap` (the family has `2^(d-1)` members).
pub fn even_subsets(
    graph: &TannerGraph,
    j: usize,
    degree_cap: usize,
) -> Result<EvenSubsetFamily, CodeError> {
    let degree = graph.check_vars(j).len();
    if degree > degree_cap || degree >= 31 {
        return Err(CodeError::DegreeAboveCap { degree, cap: degree_cap });
    }
    let masks = (0u32..1 << degree).filter(|m| m.count_ones() % 2 == 0).collect();
    Ok(EvenSubsetFamily { check: j, degree, masks })
}

/// Bit-packed GF(2) matrix; rows are parity checks.
#[derive(Debug, Clone)]
pub struct Gf2Matrix {
    rows: Vec<Vec<u64>>,
    cols: usize,
}

impl Gf2Matrix {
    pub fn from_graph(graph: &TannerGraph) -> Self {
        let words = graph.num_vars().div_ceil(64);
        let rows = (0..graph.num_checks())
            .map(|j| {
                let mut row = vec![0u64; words];
                for &i in graph.check_vars(j) {
                    row[i / 64] ^= 1 << (i % 64);
                }
                row
            })
            .collect();
        Self { rows, cols: graph.num_vars() }
    }

    fn bit(row: &[u64], c: usize) -> bool {
        row[c / 64] >> (c % 64) & 1 == 1
    }

    /// Row echelon reduction; returns pivot columns of the reduced matrix.
    fn reduce(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows.len() {
                break;
            }
            if let Some(p) = (r..self.rows.len()).find(|&p| Self::bit(&self.rows[p], c)) {
                self.rows.swap(r, p);
                let pivot_row = self.rows[r].clone();
                for (q, row) in self.rows.iter_mut().enumerate() {
                    if q != r && Self::bit(row, c) {
                        for (w, pw) in row.iter_mut().zip(&pivot_row) {
                            *w ^= pw;
                        }
                    }
                }
                pivots.push(c);
                r += 1;
            }
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        self.clone().reduce().len()
    }
}

/// A basis of the codeword space (null space of the parity-check matrix).
#[derive(Debug, Clone)]
pub struct CodewordBasis {
    n: usize,
    basis: Vec<Vec<u8>>,
}

/// Computes a codeword basis by Gaussian elimination on the parity-check
/// matrix: one basis vector per free column.
pub fn codeword_basis(graph: &TannerGraph) -> CodewordBasis {
    let n = graph.num_vars();
    let mut h = Gf2Matrix::from_graph(graph);
    let pivots = h.reduce();
    let mut is_pivot = vec![false; n];
    for &c in &pivots {
        is_pivot[c] = true;
    }
    let mut basis = Vec::new();
    for f in (0..n).filter(|&c| !is_pivot[c]) {
        let mut v = vec![0u8; n];
        v[f] = 1;
        // Pivot column of row r is pivots[r]; back-substitute the free 1.
        for (r, &pc) in pivots.iter().enumerate() {
            if Gf2Matrix::bit(&h.rows[r], f) {
                v[pc] = 1;
            }
        }
        basis.push(v);
    }
    CodewordBasis { n, basis }
}

impl CodewordBasis {
    pub fn dimension(&self) -> usize {
        self.basis.len()
    }

    pub fn block_length(&self) -> usize {
        self.n
    }

    /// Codeword for an information word given as the low `dimension()` bits
    /// of `index`.
    pub fn codeword(&self, index: u64) -> Vec<u8> {
        let mut v = vec![0u8; self.n];
        for (b, row) in self.basis.iter().enumerate() {
            if index >> b & 1 == 1 {
                for (vi, ri) in v.iter_mut().zip(row) {
                    *vi ^= ri;
                }
            }
        }
        v
    }

    /// All `2^k` codewords; refuses dimensions above `cap`.
    pub fn enumerate(&self, cap: usize) -> Result<impl Iterator<Item = Vec<u8>> + '_, CodeError> {
        if self.dimension() > cap {
            return Err(CodeError::DimensionAboveCap { dim: self.dimension(), cap });
        }
        Ok((0u64..1 << self.dimension()).map(|idx| self.codeword(idx)))
    }
}

/// Rejection-samples random information words until the codeword weight lands
/// within `tol` of `target`.
pub fn fixed_weight_codeword<R: Rng + ?Sized>(
    graph: &TannerGraph,
    target: usize,
    tol: usize,
    rng: &mut R,
) -> Result<Vec<u8>, CodeError> {
    let basis = codeword_basis(graph);
    const DRAWS: usize = 100_000;
    for _ in 0..DRAWS {
        let mut cw = vec![0u8; basis.block_length()];
        for row in &basis.basis {
            if rng.random::<bool>() {
                for (ci, ri) in cw.iter_mut().zip(row) {
                    *ci ^= ri;
                }
            }
        }
        let weight = cw.iter().map(|&b| b as usize).sum::<usize>();
        if weight.abs_diff(target) <= tol {
            return Ok(cw);
        }
    }
    Err(CodeError::WeightSearchExhausted { target, tol, draws: DRAWS })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn spc3() -> TannerGraph {
        TannerGraph::from_checks(3, vec![vec![0, 1, 2]]).unwrap()
    }

    #[test]
    fn single_parity_check_code_basics() {
        let g = spc3();
        assert!(syndrome_ok(&g, &[0, 0, 0]));
        assert!(syndrome_ok(&g, &[1, 1, 0]));
        assert!(!syndrome_ok(&g, &[1, 0, 0]));
        let fam = even_subsets(&g, 0, 12).unwrap();
        assert_eq!(fam.masks, vec![0b000, 0b011, 0b101, 0b110]);
    }

    #[test]
    fn even_subsets_count_and_cap() {
        let g = TannerGraph::from_checks(5, vec![vec![0, 1, 2, 3, 4]]).unwrap();
        let fam = even_subsets(&g, 0, 12).unwrap();
        assert_eq!(fam.masks.len(), 1 << 4);
        assert!(fam.masks.iter().all(|m| m.count_ones() % 2 == 0));
        assert!(matches!(even_subsets(&g, 0, 4), Err(CodeError::DegreeAboveCap { .. })));
    }

    #[test]
    fn regular_generation_meets_degree_and_girth_contracts() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for (n, dv, dc) in [(24, 3, 4), (30, 3, 5), (20, 2, 4)] {
            let g = generate_regular_code(n, dv, dc, &mut rng).unwrap();
            assert_eq!(g.num_vars(), n);
            assert_eq!(g.num_checks(), n * dv / dc);
            assert!((0..n).all(|i| g.var_checks(i).len() == dv));
            assert!((0..g.num_checks()).all(|j| g.check_vars(j).len() == dc));
            assert!(!g.has_four_cycle());
        }
    }

    #[test]
    fn regular_generation_is_deterministic_per_seed() {
        let g1 = generate_regular_code(24, 3, 4, &mut ChaCha12Rng::seed_from_u64(5)).unwrap();
        let g2 = generate_regular_code(24, 3, 4, &mut ChaCha12Rng::seed_from_u64(5)).unwrap();
        let g3 = generate_regular_code(24, 3, 4, &mut ChaCha12Rng::seed_from_u64(6)).unwrap();
        assert_eq!(g1, g2);
        assert_ne!(g1, g3);
    }

    #[test]
    fn flagship_code_shape_is_reachable() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let g = generate_regular_code(4923, 3, 27, &mut rng).unwrap();
        assert_eq!(g.num_checks(), 547);
        assert!(!g.has_four_cycle());
        let rate = g.rank_rate();
        assert!(rate > 0.888 && rate < 0.9, "rate {rate}");
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        assert!(matches!(
            generate_regular_code(10, 3, 4, &mut rng),
            Err(CodeError::InvalidParameters(_))
        ));
        assert!(matches!(
            generate_regular_code(3, 2, 6, &mut rng),
            Err(CodeError::InvalidParameters(_))
        ));
    }

    #[test]
    fn codeword_basis_spans_the_null_space() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let g = generate_regular_code(20, 2, 4, &mut rng).unwrap();
        let basis = codeword_basis(&g);
        assert_eq!(basis.dimension(), 20 - Gf2Matrix::from_graph(&g).rank());
        for cw in basis.enumerate(24).unwrap() {
            assert!(syndrome_ok(&g, &cw));
        }
        // Distinct info words give distinct codewords (basis is independent).
        let all: Vec<Vec<u8>> = basis.enumerate(24).unwrap().collect();
        let mut dedup = all.clone();
        dedup.sort();
        dedup.dedup();
        assert_eq!(all.len(), dedup.len());
    }

    #[test]
    fn fixed_weight_sampling_hits_the_window() {
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        let g = generate_regular_code(455, 3, 5, &mut rng).unwrap();
        let cw = fixed_weight_codeword(&g, 226, 5, &mut rng).unwrap();
        assert!(syndrome_ok(&g, &cw));
        let w: usize = cw.iter().map(|&b| b as usize).sum();
        assert!(w.abs_diff(226) <= 5, "weight {w}");
    }

    #[test]
    fn four_cycle_detection_sees_a_planted_cycle() {
        let g = TannerGraph::from_checks(4, vec![vec![0, 1], vec![0, 1, 2]]).unwrap();
        assert!(g.has_four_cycle());
        let g = TannerGraph::from_checks(4, vec![vec![0, 1], vec![1, 2], vec![2, 3]]).unwrap();
        assert!(!g.has_four_cycle());
    }
}
