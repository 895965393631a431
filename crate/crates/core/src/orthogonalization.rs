//! Element-local re-basis of the plane wave space by modified Gram-Schmidt in
//! the inner product `<u, v> = v^H H(A_K) u`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;

use crate::assembly::{assemble, GlobalSystem, PwdgSpace};
use crate::conditioning::hermitian_part;
use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::linalg::{CMatrix, Precision, Real, C64};
use crate::mesh::Mesh;

/// Default relative pivot tolerance for the working precision.
pub fn default_pivot_floor(precision: Precision) -> f64 {
    match precision {
        Precision::Binary32 => 1e-6,
        Precision::Binary64 => 1e-14,
    }
}

/// How the block-diagonal `Q` acts on the system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Congruence {
    /// `Q^H A Q`, `Q^H b`
    #[default]
    Hermitian,
    /// `Q^T A Q`, `Q^T b`
    Transpose,
}

impl Congruence {
    pub fn as_str(self) -> &'static str {
        match self {
            Congruence::Hermitian => "hermitian",
            Congruence::Transpose => "transpose",
        }
    }
}

impl fmt::Display for Congruence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Congruence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "hermitian" => Ok(Congruence::Hermitian),
            "transpose" => Ok(Congruence::Transpose),
            other => Err(Error::Config(format!("unknown congruence '{other}' (hermitian|transpose)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockStatus {
    Ok,
    /// Zero-based index of the column whose pivot fell below the floor.
    Breakdown { step: usize },
}

impl BlockStatus {
    #[inline]
    pub fn is_ok(self) -> bool {
        self == BlockStatus::Ok
    }
}

/// MGS of `e_1, ..., e_p` under `<u, v> = v^H H(A_K) u`, in the arithmetic of `T`.
///
/// Returns the upper-triangular `Q_K` and the status. On breakdown the
/// columns from the failing step on are left as the partially projected
/// vectors and must not be used.
pub fn mgs_local<T: Real>(a_k: &CMatrix<T>, pivot_floor: f64) -> (CMatrix<T>, BlockStatus) {
    assert!(a_k.is_square(), "local block must be square");
    let h = hermitian_part(a_k);
    let p = h.rows();
    let floor = T::from_f64(pivot_floor);
    // columns of V, stored as rows for contiguous access
    let mut v = CMatrix::<T>::identity(p);
    let mut status = BlockStatus::Ok;

    for j in 0..p {
        let hv = h.mul_vec(v.row(j));
        let norm2: T = v.row(j).iter().zip(&hv).map(|(x, y)| (x.conj() * y).re).sum();
        let reference = h[(j, j)].re;
        if !(norm2 > floor * reference) || !(reference > T::zero()) {
            status = BlockStatus::Breakdown { step: j };
            break;
        }
        let inv = T::one() / norm2.sqrt();
        for z in v.row_mut(j) {
            *z = *z * inv;
        }
        let hq: Vec<Complex<T>> = hv.iter().map(|&z| z * inv).collect();
        for i in j + 1..p {
            // <v_i, q_j> = q_j^H H v_i = (H q_j)^H v_i
            let mut c = Complex::new(T::zero(), T::zero());
            for (a, b) in hq.iter().zip(v.row(i)) {
                c = c + a.conj() * b;
            }
            let qj: Vec<Complex<T>> = v.row(j).to_vec();
            for (x, q) in v.row_mut(i).iter_mut().zip(&qj) {
                *x = *x - c * q;
            }
        }
    }
    (v.transpose(), status)
}

/// Block-diagonal `Q` with per-element status.
#[derive(Debug, Clone)]
pub struct BlockTransform<T: Real> {
    blocks: Vec<CMatrix<T>>,
    status: Vec<BlockStatus>,
    pivot_floor: f64,
}

impl<T: Real> BlockTransform<T> {
    /// Runs [`mgs_local`] on every diagonal block of `system`.
    pub fn from_system(system: &GlobalSystem<T>, pivot_floor: f64) -> Result<Self> {
        let mut blocks = Vec::with_capacity(system.num_blocks());
        let mut status = Vec::with_capacity(system.num_blocks());
        for e in 0..system.num_blocks() {
            let (q, s) = mgs_local(&system.local_block(e)?, pivot_floor);
            blocks.push(q);
            status.push(s);
        }
        Ok(Self {
            blocks,
            status,
            pivot_floor,
        })
    }

    /// Same, with the default floor of `T`.
    pub fn with_default_floor(system: &GlobalSystem<T>) -> Result<Self> {
        Self::from_system(system, default_pivot_floor(T::PRECISION))
    }

    #[inline]
    pub fn blocks(&self) -> &[CMatrix<T>] {
        &self.blocks
    }

    #[inline]
    pub fn status(&self) -> &[BlockStatus] {
        &self.status
    }

    #[inline]
    pub fn pivot_floor(&self) -> f64 {
        self.pivot_floor
    }

    pub fn is_ok(&self) -> bool {
        self.status.iter().all(|s| s.is_ok())
    }

    /// First element in breakdown, with its step.
    pub fn first_breakdown(&self) -> Option<(usize, usize)> {
        self.status.iter().enumerate().find_map(|(e, s)| match s {
            BlockStatus::Breakdown { step } => Some((e, *step)),
            BlockStatus::Ok => None,
        })
    }

    fn check(&self) -> Result<()> {
        match self.first_breakdown() {
            None => Ok(()),
            Some((element, step)) => Err(Error::Breakdown { element, step }),
        }
    }

    /// `u = Q u~`.
    pub fn recover(&self, coefficients: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        self.check()?;
        let p = self.blocks.first().map_or(0, |b| b.rows());
        if coefficients.len() != p * self.blocks.len() {
            return Err(Error::Dimension(format!(
                "{} coefficients for a transform of size {}",
                coefficients.len(),
                p * self.blocks.len()
            )));
        }
        let mut out = Vec::with_capacity(coefficients.len());
        for (e, q) in self.blocks.iter().enumerate() {
            out.extend(q.mul_vec(&coefficients[e * p..(e + 1) * p]));
        }
        Ok(out)
    }
}

/// `Q^H A Q`, `Q^H b` (or the transpose variant). Refuses if any block broke down.
pub fn global_transform<T: Real>(
    system: &GlobalSystem<T>,
    transform: &BlockTransform<T>,
    congruence: Congruence,
) -> Result<GlobalSystem<T>> {
    transform.check()?;
    let p = system.block_size();
    let nb = system.num_blocks();
    if transform.blocks.len() != nb || transform.blocks.iter().any(|q| q.rows() != p) {
        return Err(Error::Dimension("transform does not match the system's blocks".into()));
    }
    let left: Vec<CMatrix<T>> = transform
        .blocks
        .iter()
        .map(|q| match congruence {
            Congruence::Hermitian => q.adjoint(),
            Congruence::Transpose => q.transpose(),
        })
        .collect();
    let mut matrix = CMatrix::zeros(system.dim(), system.dim());
    for r in 0..nb {
        for c in 0..nb {
            let blk = system.block(r, c);
            if blk.max_abs() == T::zero() {
                continue;
            }
            let t = left[r].matmul(&blk).matmul(&transform.blocks[c]);
            matrix.set_block(r * p, c * p, &t);
        }
    }
    let mut rhs = Vec::with_capacity(system.dim());
    for (r, l) in left.iter().enumerate() {
        rhs.extend(l.mul_vec(&system.rhs[r * p..(r + 1) * p]));
    }
    GlobalSystem::new(matrix, rhs, p)
}

/// Smallest `p` in `ps` for which MGS breaks down on some element of `mesh`,
/// with the system rounded to `precision`. `None` if none does.
pub fn breakdown_threshold_scan(
    mesh: &Mesh,
    k: f64,
    ps: &[usize],
    precision: Precision,
    pivot_floor: Option<f64>,
) -> Result<Option<usize>> {
    if ps.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("p range must be increasing".into()));
    }
    let floor = pivot_floor.unwrap_or_else(|| default_pivot_floor(precision));
    let zero = |_: Point2, _: Point2| C64::new(0.0, 0.0);
    for &p in ps {
        let space = PwdgSpace::new(mesh.clone(), k, p, 0.0)?;
        let system = assemble(&space, &zero)?;
        let ok = match precision {
            Precision::Binary64 => BlockTransform::from_system(&system, floor)?.is_ok(),
            Precision::Binary32 => BlockTransform::from_system(&system.cast::<f32>(), floor)?.is_ok(),
        };
        if !ok {
            return Ok(Some(p));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{unit_square_mesh, MeshKind};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(n: usize, seed: u64) -> CMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        CMatrix::from_fn(n, n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    fn random_hpd(n: usize, seed: u64) -> CMatrix<f64> {
        let b = random_matrix(n, seed);
        b.adjoint().matmul(&b).add(&CMatrix::identity(n).scale(0.1))
    }

    #[test]
    fn identity_gives_identity() {
        let (q, s) = mgs_local(&CMatrix::<f64>::identity(5), 1e-14);
        assert_eq!(s, BlockStatus::Ok);
        assert_eq!(q, CMatrix::identity(5));
    }

    #[test]
    fn diagonal_scaling() {
        let a = CMatrix::from_diag(&[C64::new(4.0, 0.0), C64::new(9.0, 0.0)]);
        let (q, s) = mgs_local(&a, 1e-14);
        assert!(s.is_ok());
        assert!((q[(0, 0)] - C64::new(0.5, 0.0)).norm() < 1e-16);
        assert!((q[(1, 1)] - C64::new(1.0 / 3.0, 0.0)).norm() < 1e-16);
        assert_eq!(q[(0, 1)], C64::new(0.0, 0.0));
    }

    #[test]
    fn random_hpd_is_orthonormalized() {
        for seed in 0..5 {
            let h = random_hpd(8, seed);
            // skew-Hermitian part must be ignored
            let skew = random_matrix(8, seed + 100);
            let skew = skew.sub(&skew.adjoint()).scale(0.5);
            let (q, s) = mgs_local(&h.add(&skew), 1e-14);
            assert!(s.is_ok());
            let g = q.adjoint().matmul(&h).matmul(&q);
            assert!(g.sub(&CMatrix::identity(8)).max_abs() < 1e-12);
            for i in 0..8 {
                assert!(q[(i, i)].im == 0.0 && q[(i, i)].re > 0.0);
                for j in 0..i {
                    assert_eq!(q[(i, j)], C64::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn binary32_orthonormalization() {
        let h = random_hpd(6, 7);
        let (q, s) = mgs_local(&h.cast::<f32>(), 1e-6);
        assert!(s.is_ok());
        let g = q.cast::<f64>().adjoint().matmul(&h).matmul(&q.cast());
        assert!(g.sub(&CMatrix::identity(6)).max_abs() < 1e-4);
    }

    #[test]
    fn indefinite_is_reported() {
        let a = CMatrix::from_diag(&[C64::new(1.0, 0.0), C64::new(-1.0, 0.0), C64::new(1.0, 0.0)]);
        let (_, s) = mgs_local(&a, 1e-14);
        assert_eq!(s, BlockStatus::Breakdown { step: 1 });
        let a = CMatrix::from_diag(&[C64::new(0.0, 0.0), C64::new(1.0, 0.0)]);
        assert_eq!(mgs_local(&a, 1e-14).1, BlockStatus::Breakdown { step: 0 });
    }

    #[test]
    fn dependent_columns_break_down() {
        // rank-one H
        let v: Vec<C64> = (0..3).map(|i| C64::new(1.0 + i as f64, 0.5)).collect();
        let h = CMatrix::from_fn(3, 3, |i, j| v[i] * v[j].conj());
        let (_, s) = mgs_local(&h, 1e-14);
        assert_eq!(s, BlockStatus::Breakdown { step: 1 });
    }

    fn small_system() -> GlobalSystem<f64> {
        let mesh = unit_square_mesh(MeshKind::Tri, 2).unwrap();
        let space = PwdgSpace::new(mesh, 6.0, 5, 0.0).unwrap();
        assemble(&space, &|x: Point2, _: Point2| C64::new(x.x, 1.0)).unwrap()
    }

    #[test]
    fn identity_transform_is_noop() {
        let sys = small_system();
        let nb = sys.num_blocks();
        let t = BlockTransform {
            blocks: vec![CMatrix::identity(5); nb],
            status: vec![BlockStatus::Ok; nb],
            pivot_floor: 1e-14,
        };
        for c in [Congruence::Hermitian, Congruence::Transpose] {
            let out = global_transform(&sys, &t, c).unwrap();
            assert_eq!(out, sys);
        }
    }

    #[test]
    fn transformed_diagonal_blocks_are_identity() {
        let sys = small_system();
        let t = BlockTransform::with_default_floor(&sys).unwrap();
        assert!(t.is_ok());
        let out = global_transform(&sys, &t, Congruence::Hermitian).unwrap();
        for e in 0..out.num_blocks() {
            let h = hermitian_part(&out.local_block(e).unwrap());
            assert!(h.sub(&CMatrix::identity(5)).max_abs() < 1e-10);
        }
    }

    #[test]
    fn breakdown_refuses_transform() {
        let sys = small_system();
        let t = BlockTransform::from_system(&sys, 2.0).unwrap();
        assert!(!t.is_ok());
        assert!(matches!(
            global_transform(&sys, &t, Congruence::Hermitian),
            Err(Error::Breakdown { .. })
        ));
        assert!(t.recover(&sys.rhs).is_err());
    }

    #[test]
    fn congruence_parsing() {
        assert_eq!("transpose".parse::<Congruence>().unwrap(), Congruence::Transpose);
        assert_eq!(Congruence::default().to_string(), "hermitian");
        assert!("qt".parse::<Congruence>().is_err());
    }

    #[test]
    fn scan_rejects_unsorted_range() {
        let mesh = unit_square_mesh(MeshKind::Quad, 1).unwrap();
        assert!(breakdown_threshold_scan(&mesh, 10.0, &[3, 2], Precision::Binary64, None).is_err());
        assert_eq!(breakdown_threshold_scan(&mesh, 10.0, &[1], Precision::Binary32, None).unwrap(), None);
    }
}
