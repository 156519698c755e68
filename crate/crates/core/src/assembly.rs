//! Block-sparse adjacency and Laplacian matrices.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::blocks::{sample_block, BlockMeasure, SymmetricBlock};
use crate::error::{Error, Result};
use crate::graph::EdgeSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixKind {
    Adjacency,
    Laplacian,
}

impl MatrixKind {
    pub fn name(self) -> &'static str {
        match self {
            MatrixKind::Adjacency => "adjacency",
            MatrixKind::Laplacian => "laplacian",
        }
    }
}

impl FromStr for MatrixKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "adjacency" => Ok(MatrixKind::Adjacency),
            "laplacian" => Ok(MatrixKind::Laplacian),
            other => Err(Error::Parse(format!("unknown matrix kind `{other}`"))),
        }
    }
}

/// Real symmetric `Nd x Nd` matrix stored as `d x d` blocks.
///
/// Off-diagonal blocks are keyed by `(i, j)` with `i < j`; the block at
/// `(j, i)` is the same matrix. For a Laplacian the stored off-diagonal block
/// is `-X_ij` and `diagonal[i]` is the sum of the incident `X_ij`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSparseMatrix {
    n_vertices: usize,
    block_dim: usize,
    kind: MatrixKind,
    off_diagonal: BTreeMap<(usize, usize), SymmetricBlock>,
    diagonal: Option<Vec<SymmetricBlock>>,
}

fn negated(b: &SymmetricBlock) -> SymmetricBlock {
    SymmetricBlock::from_dense(-b.entries()).expect("negation keeps symmetry")
}

impl BlockSparseMatrix {
    /// Builds a matrix from one block per edge, in the order of `edges.edges()`.
    pub fn from_edge_blocks(
        edges: &EdgeSet,
        blocks: Vec<SymmetricBlock>,
        kind: MatrixKind,
    ) -> Result<Self> {
        if blocks.len() != edges.len() {
            return Err(Error::DimensionMismatch {
                expected: edges.len(),
                got: blocks.len(),
            });
        }
        let d = match blocks.first() {
            Some(b) => b.dim(),
            None => 1,
        };
        Self::from_edge_blocks_with_dim(edges, blocks, kind, d)
    }

    fn from_edge_blocks_with_dim(
        edges: &EdgeSet,
        blocks: Vec<SymmetricBlock>,
        kind: MatrixKind,
        d: usize,
    ) -> Result<Self> {
        if let Some(b) = blocks.iter().find(|b| b.dim() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: b.dim(),
            });
        }
        let n = edges.n_vertices();
        let mut off_diagonal = BTreeMap::new();
        let diagonal = match kind {
            MatrixKind::Adjacency => {
                for (&e, b) in edges.edges().iter().zip(blocks) {
                    off_diagonal.insert(e, b);
                }
                None
            }
            MatrixKind::Laplacian => {
                let mut diag = vec![DMatrix::<f64>::zeros(d, d); n];
                for (&(i, j), b) in edges.edges().iter().zip(blocks) {
                    diag[i] += b.entries();
                    diag[j] += b.entries();
                    off_diagonal.insert((i, j), negated(&b));
                }
                let diag = diag
                    .into_iter()
                    .map(SymmetricBlock::from_dense)
                    .collect::<Result<Vec<_>>>()?;
                Some(diag)
            }
        };
        Ok(Self {
            n_vertices: n,
            block_dim: d,
            kind,
            off_diagonal,
            diagonal,
        })
    }

    pub fn zeros(n_vertices: usize, block_dim: usize, kind: MatrixKind) -> Self {
        let diagonal = match kind {
            MatrixKind::Adjacency => None,
            MatrixKind::Laplacian => Some(vec![SymmetricBlock::zeros(block_dim); n_vertices]),
        };
        Self {
            n_vertices,
            block_dim,
            kind,
            off_diagonal: BTreeMap::new(),
            diagonal,
        }
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn block_dim(&self) -> usize {
        self.block_dim
    }

    /// `N * d`.
    pub fn size(&self) -> usize {
        self.n_vertices * self.block_dim
    }

    pub fn kind(&self) -> MatrixKind {
        self.kind
    }

    pub fn off_diagonal(&self) -> &BTreeMap<(usize, usize), SymmetricBlock> {
        &self.off_diagonal
    }

    pub fn diagonal(&self) -> Option<&[SymmetricBlock]> {
        self.diagonal.as_deref()
    }

    /// Block at `(i, j)` if one is stored.
    pub fn block(&self, i: usize, j: usize) -> Option<&SymmetricBlock> {
        if i == j {
            return self.diagonal.as_ref().map(|d| &d[i]);
        }
        self.off_diagonal.get(&(i.min(j), i.max(j)))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let d = self.block_dim;
        let mut m = DMatrix::zeros(self.size(), self.size());
        for (&(i, j), b) in &self.off_diagonal {
            m.view_mut((i * d, j * d), (d, d)).copy_from(b.entries());
            m.view_mut((j * d, i * d), (d, d)).copy_from(b.entries());
        }
        if let Some(diag) = &self.diagonal {
            for (i, b) in diag.iter().enumerate() {
                m.view_mut((i * d, i * d), (d, d)).copy_from(b.entries());
            }
        }
        m
    }

    /// `y = M x`. Off-diagonal contributions are accumulated first, in edge
    /// order, then the diagonal; for a Laplacian this makes `M (w, ..., w)`
    /// vanish exactly when `w` is a coordinate vector.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.size() {
            return Err(Error::DimensionMismatch {
                expected: self.size(),
                got: x.len(),
            });
        }
        let d = self.block_dim;
        let mut y = vec![0.0; self.size()];
        for (&(i, j), b) in &self.off_diagonal {
            let e = b.entries();
            for r in 0..d {
                let (mut si, mut sj) = (0.0, 0.0);
                for c in 0..d {
                    si += e[(r, c)] * x[j * d + c];
                    sj += e[(r, c)] * x[i * d + c];
                }
                y[i * d + r] += si;
                y[j * d + r] += sj;
            }
        }
        if let Some(diag) = &self.diagonal {
            for (i, b) in diag.iter().enumerate() {
                let e = b.entries();
                for r in 0..d {
                    let mut s = 0.0;
                    for c in 0..d {
                        s += e[(r, c)] * x[i * d + c];
                    }
                    y[i * d + r] += s;
                }
            }
        }
        Ok(y)
    }

    /// `tr(M^2)` from the blocks: twice the squared Frobenius norm of each
    /// stored off-diagonal block plus that of each diagonal block.
    pub fn trace_of_square(&self) -> f64 {
        let fro = |b: &SymmetricBlock| b.entries().iter().map(|v| v * v).sum::<f64>();
        let off: f64 = self.off_diagonal.values().map(|b| 2.0 * fro(b)).sum();
        let diag: f64 = self.diagonal.iter().flatten().map(fro).sum();
        off + diag
    }

    pub fn trace(&self) -> f64 {
        self.diagonal
            .iter()
            .flatten()
            .map(SymmetricBlock::trace)
            .sum()
    }

    /// Text snapshot: a header `N d kind`, then one line per stored block,
    /// `i j` followed by its `d*d` entries in row-major order. Diagonal
    /// blocks of a Laplacian appear as `i i`. Floats use the shortest
    /// representation that parses back to the same value.
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "{} {} {}\n",
            self.n_vertices,
            self.block_dim,
            self.kind.name()
        );
        let mut line = |i: usize, j: usize, b: &SymmetricBlock| {
            let _ = write!(s, "{i} {j}");
            let e = b.entries();
            for r in 0..self.block_dim {
                for c in 0..self.block_dim {
                    let _ = write!(s, " {:?}", e[(r, c)]);
                }
            }
            s.push('\n');
        };
        if let Some(diag) = &self.diagonal {
            for (i, b) in diag.iter().enumerate() {
                line(i, i, b);
            }
        }
        for (&(i, j), b) in &self.off_diagonal {
            line(i, j, b);
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("missing header".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::Parse(format!("bad header `{header}`")));
        }
        let parse_usize = |s: &str| {
            s.parse::<usize>()
                .map_err(|e| Error::Parse(format!("`{s}`: {e}")))
        };
        let n = parse_usize(fields[0])?;
        let d = parse_usize(fields[1])?;
        let kind: MatrixKind = fields[2].parse()?;
        let mut m = Self::zeros(n, d, kind);
        for line in lines {
            let tok: Vec<&str> = line.split_whitespace().collect();
            if tok.len() != 2 + d * d {
                return Err(Error::Parse(format!(
                    "expected {} fields, got {}",
                    2 + d * d,
                    tok.len()
                )));
            }
            let i = parse_usize(tok[0])?;
            let j = parse_usize(tok[1])?;
            if i >= n || j >= n {
                return Err(Error::Parse(format!("vertex out of range in `{i} {j}`")));
            }
            let vals = tok[2..]
                .iter()
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|e| Error::Parse(format!("`{s}`: {e}")))
                })
                .collect::<Result<Vec<_>>>()?;
            let block = SymmetricBlock::from_dense(DMatrix::from_row_slice(d, d, &vals))?;
            if i == j {
                match &mut m.diagonal {
                    Some(diag) => diag[i] = block,
                    None => return Err(Error::Parse("diagonal block in adjacency matrix".into())),
                }
            } else {
                if i > j {
                    return Err(Error::Parse(format!(
                        "off-diagonal key `{i} {j}` not ordered"
                    )));
                }
                m.off_diagonal.insert((i, j), block);
            }
        }
        Ok(m)
    }
}

fn sample_edge_blocks<R: Rng + ?Sized>(
    e: &EdgeSet,
    m: &BlockMeasure,
    rng: &mut R,
) -> Result<Vec<SymmetricBlock>> {
    m.validate()?;
    Ok(e.edges().iter().map(|_| sample_block(m, rng)).collect())
}

/// Adjacency matrix with one independent block per edge.
pub fn assemble_adjacency<R: Rng + ?Sized>(
    e: &EdgeSet,
    m: &BlockMeasure,
    rng: &mut R,
) -> Result<BlockSparseMatrix> {
    let blocks = sample_edge_blocks(e, m, rng)?;
    BlockSparseMatrix::from_edge_blocks_with_dim(e, blocks, MatrixKind::Adjacency, m.dim())
}

/// Block Laplacian `D - A` with one independent block per edge.
pub fn assemble_laplacian<R: Rng + ?Sized>(
    e: &EdgeSet,
    m: &BlockMeasure,
    rng: &mut R,
) -> Result<BlockSparseMatrix> {
    let blocks = sample_edge_blocks(e, m, rng)?;
    BlockSparseMatrix::from_edge_blocks_with_dim(e, blocks, MatrixKind::Laplacian, m.dim())
}

pub fn assemble<R: Rng + ?Sized>(
    kind: MatrixKind,
    e: &EdgeSet,
    m: &BlockMeasure,
    rng: &mut R,
) -> Result<BlockSparseMatrix> {
    match kind {
        MatrixKind::Adjacency => assemble_adjacency(e, m, rng),
        MatrixKind::Laplacian => assemble_laplacian(e, m, rng),
    }
}

/// Dense oracle for `matvec`.
pub fn dense_matvec(m: &BlockSparseMatrix, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != m.size() {
        return Err(Error::DimensionMismatch {
            expected: m.size(),
            got: x.len(),
        });
    }
    Ok((m.to_dense() * DVector::from_column_slice(x))
        .as_slice()
        .to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocks::MeasureFamily;
    use crate::graph::{sample_edges, GraphSpec};
    use crate::rng::seed_stream;
    use proptest::prelude::*;

    fn sphere(d: usize) -> BlockMeasure {
        BlockMeasure::new(MeasureFamily::RankOneSphere, d, 1.0).unwrap()
    }

    fn sym_eigs(m: &DMatrix<f64>) -> Vec<f64> {
        let mut v: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
        v.sort_by(f64::total_cmp);
        v
    }

    #[test]
    fn empty_edges_give_zero_matrix() {
        let e = EdgeSet::empty(3);
        let a = assemble_adjacency(&e, &sphere(2), &mut seed_stream(1, 0)).unwrap();
        assert_eq!(a.to_dense(), DMatrix::zeros(6, 6));
        let l = assemble_laplacian(&e, &sphere(2), &mut seed_stream(1, 0)).unwrap();
        assert_eq!(l.to_dense(), DMatrix::zeros(6, 6));
    }

    #[test]
    fn single_edge_adjacency_spectrum() {
        let e = EdgeSet::from_pairs(2, [(0, 1)]).unwrap();
        let a = assemble_adjacency(&e, &sphere(3), &mut seed_stream(2, 0)).unwrap();
        let ev = sym_eigs(&a.to_dense());
        let expect = [-1.0, 0.0, 0.0, 0.0, 0.0, 1.0];
        for (x, y) in ev.iter().zip(expect) {
            assert!((x - y).abs() < 1e-10, "{ev:?}");
        }
    }

    #[test]
    fn path_graph_scalar_spectrum() {
        let e = EdgeSet::from_pairs(3, [(0, 1), (1, 2)]).unwrap();
        let ones = vec![SymmetricBlock::identity(1); 2];
        let a = BlockSparseMatrix::from_edge_blocks(&e, ones, MatrixKind::Adjacency).unwrap();
        let ev = sym_eigs(&a.to_dense());
        let s = 2f64.sqrt();
        for (x, y) in ev.iter().zip([-s, 0.0, s]) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn single_edge_laplacian_spectrum() {
        let d = 3;
        let e = EdgeSet::from_pairs(2, [(0, 1)]).unwrap();
        let m = BlockMeasure::new(MeasureFamily::FullGauss, d, 1.0).unwrap();
        let mut rng = seed_stream(3, 0);
        let x = sample_block(&m, &mut rng);
        let l = BlockSparseMatrix::from_edge_blocks(&e, vec![x.clone()], MatrixKind::Laplacian)
            .unwrap();
        let ev = sym_eigs(&l.to_dense());
        let mut expect: Vec<f64> = sym_eigs(x.entries()).iter().map(|v| 2.0 * v).collect();
        expect.extend(std::iter::repeat_n(0.0, d));
        expect.sort_by(f64::total_cmp);
        for (a, b) in ev.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-10, "{ev:?} vs {expect:?}");
        }
    }

    #[test]
    fn laplacian_is_psd_with_rank_one_blocks() {
        let spec = GraphSpec::erdos_renyi(60, 4.0);
        let mut rng = seed_stream(4, 0);
        let e = sample_edges(&spec, &mut rng).unwrap();
        let l = assemble_laplacian(&e, &sphere(3), &mut rng).unwrap();
        let ev = sym_eigs(&l.to_dense());
        assert!(ev[0] >= -1e-8);
    }

    #[test]
    fn laplacian_row_sums_and_null_vectors_are_exact() {
        let spec = GraphSpec::erdos_renyi(40, 5.0);
        let mut rng = seed_stream(5, 0);
        let e = sample_edges(&spec, &mut rng).unwrap();
        let d = 3;
        let m = BlockMeasure::new(MeasureFamily::FullGauss, d, 1.3).unwrap();
        let l = assemble_laplacian(&e, &m, &mut rng).unwrap();
        let diag = l.diagonal().unwrap();
        for (i, di) in diag.iter().enumerate() {
            let mut s = DMatrix::<f64>::zeros(d, d);
            for &(a, b) in e.edges() {
                if a == i || b == i {
                    s += l.block(a, b).unwrap().entries();
                }
            }
            assert_eq!(di.entries() + s, DMatrix::zeros(d, d));
        }
        for k in 0..d {
            let x: Vec<f64> = (0..l.size())
                .map(|idx| if idx % d == k { 1.0 } else { 0.0 })
                .collect();
            assert!(l.matvec(&x).unwrap().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn dense_matrix_is_exactly_symmetric() {
        let spec = GraphSpec::erdos_renyi(30, 3.0);
        let mut rng = seed_stream(6, 0);
        let e = sample_edges(&spec, &mut rng).unwrap();
        let m = BlockMeasure::new(MeasureFamily::FullFixedTrace, 4, 1.0).unwrap();
        for kind in [MatrixKind::Adjacency, MatrixKind::Laplacian] {
            let a = assemble(kind, &e, &m, &mut rng).unwrap();
            let dense = a.to_dense();
            assert_eq!(dense, dense.transpose());
        }
    }

    #[test]
    fn matvec_block_structure() {
        let e = EdgeSet::from_pairs(2, [(0, 1)]).unwrap();
        let a = assemble_adjacency(&e, &sphere(3), &mut seed_stream(7, 0)).unwrap();
        let x = a.block(0, 1).unwrap().entries().clone();
        let u = [0.3, -1.0, 2.0];
        let y = a.matvec(&[u[0], u[1], u[2], 0.0, 0.0, 0.0]).unwrap();
        let xu = &x * DVector::from_column_slice(&u);
        assert_eq!(&y[..3], &[0.0; 3]);
        for r in 0..3 {
            assert!((y[3 + r] - xu[r]).abs() < 1e-15);
        }
        let z = BlockSparseMatrix::zeros(2, 3, MatrixKind::Adjacency);
        assert_eq!(z.matvec(&[1.0; 6]).unwrap(), vec![0.0; 6]);
        assert!(matches!(
            z.matvec(&[1.0; 5]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn matvec_matches_dense_oracle() {
        let spec = GraphSpec::erdos_renyi(8, 3.0);
        let mut rng = seed_stream(8, 0);
        let e = sample_edges(&spec, &mut rng).unwrap();
        let m = BlockMeasure::new(MeasureFamily::FullGauss, 3, 1.0).unwrap();
        for kind in [MatrixKind::Adjacency, MatrixKind::Laplacian] {
            let a = assemble(kind, &e, &m, &mut rng).unwrap();
            let x: Vec<f64> = (0..a.size()).map(|k| (k as f64 * 0.7).sin()).collect();
            let y = a.matvec(&x).unwrap();
            let yd = dense_matvec(&a, &x).unwrap();
            let scale = yd.iter().map(|v| v.abs()).fold(1e-300, f64::max);
            for (p, q) in y.iter().zip(&yd) {
                assert!((p - q).abs() <= 1e-10 * scale);
            }
        }
    }

    #[test]
    fn blockwise_trace_of_square_matches_dense() {
        let spec = GraphSpec::erdos_renyi(25, 4.0);
        let mut rng = seed_stream(9, 0);
        let e = sample_edges(&spec, &mut rng).unwrap();
        let m = BlockMeasure::new(MeasureFamily::RankOneGauss, 3, 1.0).unwrap();
        for kind in [MatrixKind::Adjacency, MatrixKind::Laplacian] {
            let a = assemble(kind, &e, &m, &mut rng).unwrap();
            let dense = a.to_dense();
            let direct = (&dense * &dense).trace();
            assert!((a.trace_of_square() - direct).abs() <= 1e-10 * direct.abs());
            assert!((a.trace() - dense.trace()).abs() <= 1e-10 * (1.0 + dense.trace().abs()));
        }
    }

    #[test]
    fn text_format_rejects_garbage() {
        assert!(BlockSparseMatrix::from_text("").is_err());
        assert!(BlockSparseMatrix::from_text("2 1 adjacency\n0 1\n").is_err());
        assert!(BlockSparseMatrix::from_text("2 1 adjacency\n1 0 1.0\n").is_err());
        assert!(BlockSparseMatrix::from_text("2 1 adjacency\n0 0 1.0\n").is_err());
        assert!(BlockSparseMatrix::from_text("2 1 sideways\n").is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn text_round_trip(seed in any::<u64>(), n in 2usize..12, d in 1usize..4, lap in any::<bool>()) {
            let mut rng = seed_stream(seed, 0);
            let e = sample_edges(&GraphSpec::erdos_renyi(n, 2.0), &mut rng).unwrap();
            let m = BlockMeasure::new(MeasureFamily::FullGauss, d, 1.0).unwrap();
            let kind = if lap { MatrixKind::Laplacian } else { MatrixKind::Adjacency };
            let a = assemble(kind, &e, &m, &mut rng).unwrap();
            let back = BlockSparseMatrix::from_text(&a.to_text()).unwrap();
            prop_assert_eq!(back.to_dense(), a.to_dense());
            prop_assert_eq!(back.to_text(), a.to_text());
        }
    }
}
