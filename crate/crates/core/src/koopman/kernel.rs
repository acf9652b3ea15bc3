//! Kernel EDMD with compactly supported Wendland kernels.
//!
//! The Koopman operator is compressed onto `span{k(., x_i)}` for pairwise
//! distinct nodes `x_1..x_d`, giving `K^ = K_X^{-1} K_{F(X)} K_X^{-1}`. The
//! surrogate `psi(F(x)) ~ psi_X^T K^^T k_X(x)` propagates any observable from
//! its values at the nodes. For control-affine maps one such matrix is built
//! per component `g~_0..g~_m` estimated by local affine regression.

use log::warn;
use rayon::prelude::*;

use super::bilinear::ClusterFit;
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};

/// Largest state dimension for which kernels are tabulated.
pub const MAX_KERNEL_DIM: usize = 3;
/// Largest smoothness degree for which kernels are tabulated.
pub const MAX_KERNEL_SMOOTHNESS: usize = 2;
/// Largest node count for which [`constant_c`] enumerates all vertices.
pub const EXACT_C_MAX_NODES: usize = 20;

/// Wendland function `phi_{n,k}(r / rho)`, normalized to `phi(0) = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WendlandKernel {
    n: usize,
    k: usize,
    rho: f64,
}

impl WendlandKernel {
    pub fn new(n: usize, k: usize, rho: f64) -> Result<Self> {
        if n == 0 || n > MAX_KERNEL_DIM || k > MAX_KERNEL_SMOOTHNESS {
            return Err(Error::UnsupportedKernel { n, k });
        }
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::Domain(format!("support radius must be positive, got {rho}")));
        }
        Ok(Self { n, k, rho })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// `phi(0)`.
    pub fn phi0(&self) -> f64 {
        1.0
    }

    /// `phi(r)`; zero for `r >= rho`.
    pub fn eval(&self, r: f64) -> Result<f64> {
        if !(r >= 0.0) {
            return Err(Error::Domain(format!("radius must be nonnegative, got {r}")));
        }
        Ok(self.phi(r / self.rho))
    }

    fn phi(&self, r: f64) -> f64 {
        if r >= 1.0 {
            return 0.0;
        }
        let s = 1.0 - r;
        match (self.n, self.k) {
            (1, 0) => s,
            (1, 1) => s.powi(3) * (3.0 * r + 1.0),
            (1, 2) => s.powi(5) * (8.0 * r * r + 5.0 * r + 1.0),
            (_, 0) => s * s,
            (_, 1) => s.powi(4) * (4.0 * r + 1.0),
            (_, _) => s.powi(6) * (35.0 * r * r + 18.0 * r + 3.0) / 3.0,
        }
    }

    /// `k(x, y) = phi(||x - y||)`.
    pub fn kernel(&self, x: &Vector, y: &Vector) -> f64 {
        self.phi((x - y).norm() / self.rho)
    }

    /// `k_X(x) = (k(x, x_1), ..., k(x, x_d))`.
    pub fn features(&self, nodes: &[Vector], x: &Vector) -> Vector {
        Vector::from_iterator(nodes.len(), nodes.iter().map(|xi| self.kernel(x, xi)))
    }
}

/// `(k(a_i, b_j))_{ij}`.
pub fn cross_kernel_matrix(kernel: &WendlandKernel, a: &[Vector], b: &[Vector]) -> Matrix {
    let rows: Vec<Vec<f64>> = a
        .par_iter()
        .map(|ai| b.iter().map(|bj| kernel.kernel(ai, bj)).collect())
        .collect();
    Matrix::from_fn(a.len(), b.len(), |i, j| rows[i][j])
}

fn check_nodes(kernel: &WendlandKernel, nodes: &[Vector]) -> Result<()> {
    if nodes.is_empty() {
        return Err(Error::Domain("empty node set".into()));
    }
    for (i, x) in nodes.iter().enumerate() {
        if x.len() != kernel.n {
            return Err(Error::DimensionMismatch(format!(
                "node {i} has dimension {}, kernel expects {}",
                x.len(),
                kernel.n
            )));
        }
        if !x.iter().all(|c| c.is_finite()) {
            return Err(Error::NonFinite);
        }
    }
    for i in 0..nodes.len() {
        for j in (i + 1)..nodes.len() {
            if nodes[i] == nodes[j] {
                return Err(Error::DuplicateNodes(i, j));
            }
        }
    }
    Ok(())
}

/// `K_X = (k(x_i, x_j))_{ij}`, checked to be positive definite.
pub fn kernel_matrix(kernel: &WendlandKernel, nodes: &[Vector]) -> Result<Matrix> {
    check_nodes(kernel, nodes)?;
    let k = cross_kernel_matrix(kernel, nodes, nodes);
    factor(&k)?;
    Ok(k)
}

fn factor(k: &Matrix) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    k.clone().cholesky().ok_or_else(|| Error::IllConditionedNodes {
        min_eig: linalg::min_eig_sym(k).unwrap_or(f64::NAN),
    })
}

/// `K^ = K_X^{-1} K_{F(X)} K_X^{-1}` with `K_{F(X)} = (k(F(x_i), x_j))_{ij}`.
fn compress(kernel: &WendlandKernel, chol: &nalgebra::Cholesky<f64, nalgebra::Dyn>, nodes: &[Vector], images: &[Vector]) -> Matrix {
    let kf = cross_kernel_matrix(kernel, images, nodes);
    let left = chol.solve(&kf);
    chol.solve(&left.transpose()).transpose()
}

/// Fitted kEDMD surrogate, autonomous (one matrix) or control-affine
/// (`K^_0..K^_m`).
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSurrogate {
    pub kernel: WendlandKernel,
    pub nodes: Vec<Vector>,
    pub coefficients: Vec<Matrix>,
    /// Observable values at the nodes, `d x L`; row `i` is `psi(x_i)`.
    pub psi_x: Matrix,
    /// `||K_X^{-1}||_2`.
    pub kx_inv_norm: f64,
}

impl KernelSurrogate {
    fn build(kernel: &WendlandKernel, nodes: &[Vector], images: &[Vec<Vector>], psi_x: Option<Matrix>) -> Result<Self> {
        let kx = kernel_matrix(kernel, nodes)?;
        let chol = factor(&kx)?;
        let d = nodes.len();
        for img in images {
            if img.len() != d {
                return Err(Error::DimensionMismatch(format!("{} images for {d} nodes", img.len())));
            }
            for y in img {
                if y.len() != kernel.n {
                    return Err(Error::DimensionMismatch(format!(
                        "image has dimension {}, kernel expects {}",
                        y.len(),
                        kernel.n
                    )));
                }
                if !y.iter().all(|c| c.is_finite()) {
                    return Err(Error::NonFinite);
                }
            }
        }
        let psi_x = match psi_x {
            Some(p) if p.nrows() != d => {
                return Err(Error::DimensionMismatch(format!("observable table has {} rows for {d} nodes", p.nrows())))
            }
            Some(p) => p,
            None => Matrix::from_fn(d, kernel.n, |i, l| nodes[i][l]),
        };
        let coefficients = images.iter().map(|img| compress(kernel, &chol, nodes, img)).collect();
        let kx_inv_norm = 1.0 / linalg::min_eig_sym(&kx)?;
        Ok(Self {
            kernel: *kernel,
            nodes: nodes.to_vec(),
            coefficients,
            psi_x,
            kx_inv_norm,
        })
    }

    /// Number of control inputs (zero for an autonomous surrogate).
    pub fn m(&self) -> usize {
        self.coefficients.len() - 1
    }

    /// `K^_0 + sum_k u_k K^_k`.
    pub fn coefficient_for(&self, u: &[f64]) -> Matrix {
        let mut c = self.coefficients[0].clone();
        for (k, uk) in u.iter().enumerate() {
            c += &self.coefficients[k + 1] * *uk;
        }
        c
    }

    /// `psi_X^T (K^_0 + sum_k u_k K^_k)^T k_X(x)`.
    pub fn predict_observable(&self, x: &Vector, u: &[f64]) -> Result<Vector> {
        if u.len() != self.m() {
            return Err(Error::DimensionMismatch(format!("input has length {}, expected {}", u.len(), self.m())));
        }
        if x.len() != self.kernel.n {
            return Err(Error::DimensionMismatch(format!(
                "state has dimension {}, expected {}",
                x.len(),
                self.kernel.n
            )));
        }
        let kx = self.kernel.features(&self.nodes, x);
        let w = self.coefficient_for(u).transpose() * kx;
        Ok(self.psi_x.transpose() * w)
    }
}

/// Autonomous kEDMD on coordinate observables.
pub fn kedmd_fit(kernel: &WendlandKernel, nodes: &[Vector], successors: &[Vector]) -> Result<KernelSurrogate> {
    KernelSurrogate::build(kernel, nodes, &[successors.to_vec()], None)
}

/// Autonomous kEDMD propagating observables given by their node values.
pub fn kedmd_fit_observables(kernel: &WendlandKernel, nodes: &[Vector], successors: &[Vector], psi_x: Matrix) -> Result<KernelSurrogate> {
    KernelSurrogate::build(kernel, nodes, &[successors.to_vec()], Some(psi_x))
}

/// Control-affine kEDMD from `g~_k(x_i)`, indexed `g_tilde[k][i]`.
pub fn kedmd_control_fit(kernel: &WendlandKernel, nodes: &[Vector], g_tilde: &[Vec<Vector>]) -> Result<KernelSurrogate> {
    if g_tilde.is_empty() {
        return Err(Error::Domain("need at least g~_0".into()));
    }
    KernelSurrogate::build(kernel, nodes, g_tilde, None)
}

/// Nodes and `g~_k(x_i)` from local affine fits: `g~_0 = g0^`, `g~_k` is
/// column `k` of `G^`.
pub fn g_tilde_from_fits(fits: &[ClusterFit], m: usize) -> (Vec<Vector>, Vec<Vec<Vector>>) {
    let nodes = fits.iter().map(|f| f.center.clone()).collect();
    let g = (0..=m).map(|k| fits.iter().map(|f| f.component(k)).collect()).collect();
    (nodes, g)
}

/// Largest distance from a probe to its nearest node. A lower estimate of
/// the fill distance over the domain the probes sample.
pub fn fill_distance(nodes: &[Vector], probes: &[Vector]) -> Result<f64> {
    if nodes.is_empty() {
        return Err(Error::Domain("empty node set".into()));
    }
    if probes.is_empty() {
        return Err(Error::Domain("need at least one probe".into()));
    }
    Ok(probes
        .par_iter()
        .map(|p| nodes.iter().map(|x| (p - x).norm()).fold(f64::INFINITY, f64::min))
        .reduce(|| 0.0, f64::max))
}

/// Tensor grid with `per_dim` equispaced points per axis (endpoints included).
pub fn box_grid(lo: &[f64], hi: &[f64], per_dim: usize) -> Result<Vec<Vector>> {
    if lo.len() != hi.len() || lo.is_empty() {
        return Err(Error::DimensionMismatch("box corners must share a positive dimension".into()));
    }
    if per_dim == 0 {
        return Err(Error::Domain("need at least one point per axis".into()));
    }
    let n = lo.len();
    let axis = |j: usize, t: usize| {
        if per_dim == 1 {
            0.5 * (lo[j] + hi[j])
        } else {
            lo[j] + (hi[j] - lo[j]) * t as f64 / (per_dim - 1) as f64
        }
    };
    let total = per_dim.pow(n as u32);
    Ok((0..total)
        .map(|mut idx| {
            Vector::from_fn(n, |j, _| {
                let t = idx % per_dim;
                idx /= per_dim;
                axis(j, t)
            })
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantC {
    pub value: f64,
    /// `false` when the value is the upper bound `(phi(0) d lambda_max(K_X^{-1}))^{1/2}`.
    pub exact: bool,
}

/// `phi(0)^{1/2} (max_{||v||_inf <= 1} v^T K_X^{-1} v)^{1/2}`.
///
/// The maximum of a convex quadratic over the cube sits at a vertex; up to
/// [`EXACT_C_MAX_NODES`] nodes all vertices are visited in Gray-code order.
pub fn constant_c(kx: &Matrix) -> Result<ConstantC> {
    let d = kx.nrows();
    if d == 0 || kx.ncols() != d {
        return Err(Error::DimensionMismatch("K_X must be square and nonempty".into()));
    }
    let phi0 = kx[(0, 0)];
    let chol = factor(kx)?;
    if d > EXACT_C_MAX_NODES {
        let lmax = 1.0 / linalg::min_eig_sym(kx)?;
        return Ok(ConstantC {
            value: (phi0 * d as f64 * lmax).sqrt(),
            exact: false,
        });
    }
    let a = chol.inverse();
    let mut v = vec![1.0; d];
    let mut w: Vector = a.column_sum();
    let mut q = w.sum();
    let mut best = q;
    // v_0 stays +1: v and -v give the same value.
    for step in 1u64..(1u64 << (d - 1)) {
        let j = step.trailing_zeros() as usize + 1;
        let vj = v[j];
        q += -4.0 * vj * w[j] + 4.0 * a[(j, j)];
        w.axpy(-2.0 * vj, &a.column(j), 1.0);
        v[j] = -vj;
        best = best.max(q);
    }
    Ok(ConstantC {
        value: (phi0 * best).sqrt(),
        exact: true,
    })
}

/// `C1 h^{k+1/2} + C2 c ||K_X^{-1}|| r_X sigma~`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelBoundTerms {
    pub fill_distance: f64,
    pub smoothness: usize,
    pub c: f64,
    pub kx_inv_norm: f64,
    pub cluster_radius: f64,
    pub sigma_tilde: f64,
}

impl KernelBoundTerms {
    pub fn evaluate(&self, c1: f64, c2: f64) -> f64 {
        c1 * self.fill_distance.powf(self.smoothness as f64 + 0.5)
            + c2 * self.c * self.kx_inv_norm * self.cluster_radius * self.sigma_tilde
    }

    /// Whether `r_X < h_X / 2`; logs a warning otherwise.
    pub fn radius_condition(&self) -> bool {
        let ok = self.cluster_radius < 0.5 * self.fill_distance;
        if !ok {
            warn!(
                "cluster radius {} violates r_X < h_X/2 (h_X = {}); bound not guaranteed",
                self.cluster_radius, self.fill_distance
            );
        }
        ok
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_row_slice(xs)
    }

    fn all_kernels() -> Vec<WendlandKernel> {
        let mut out = Vec::new();
        for n in 1..=3 {
            for k in 0..=2 {
                out.push(WendlandKernel::new(n, k, 1.0).unwrap());
            }
        }
        out
    }

    #[test]
    fn compact_support_and_normalization() {
        for ker in all_kernels() {
            assert_eq!(ker.eval(0.0).unwrap(), 1.0);
            assert_eq!(ker.eval(1.0).unwrap(), 0.0);
            assert_eq!(ker.eval(3.5).unwrap(), 0.0);
        }
        let wide = WendlandKernel::new(2, 1, 2.0).unwrap();
        assert!(wide.eval(1.5).unwrap() > 0.0);
        assert_eq!(wide.eval(2.0).unwrap(), 0.0);
    }

    #[test]
    fn k1_table_entry() {
        let ker = WendlandKernel::new(3, 1, 1.0).unwrap();
        let r: f64 = 0.3;
        assert_relative_eq!(ker.eval(r).unwrap(), (1.0 - r).powi(4) * (4.0 * r + 1.0), epsilon = 1e-15);
    }

    #[test]
    fn smooth_at_support_boundary() {
        // k >= 1 kernels are C^2 across r = 1: value, slope and curvature vanish
        for ker in all_kernels().into_iter().filter(|k| k.k() >= 1) {
            let h = 1e-4;
            let f = |r: f64| ker.eval(r).unwrap();
            assert!(f(1.0 - h).abs() < 1e-9);
            let slope = (f(1.0) - f(1.0 - h)) / h;
            assert!(slope.abs() < 1e-5);
            let curv = (f(1.0) - 2.0 * f(1.0 - h) + f(1.0 - 2.0 * h)) / (h * h);
            assert!(curv.abs() < 1e-2, "{ker:?} curvature {curv}");
        }
    }

    #[test]
    fn nonincreasing_on_support() {
        for ker in all_kernels() {
            let mut prev = f64::INFINITY;
            for i in 0..=1000 {
                let val = ker.eval(i as f64 / 1000.0).unwrap();
                assert!(val <= prev + 1e-15);
                prev = val;
            }
        }
    }

    #[test]
    fn unsupported_pairs() {
        assert!(matches!(WendlandKernel::new(4, 1, 1.0), Err(Error::UnsupportedKernel { n: 4, k: 1 })));
        assert!(matches!(WendlandKernel::new(2, 3, 1.0), Err(Error::UnsupportedKernel { .. })));
        assert!(WendlandKernel::new(2, 1, 0.0).is_err());
        assert!(WendlandKernel::new(2, 1, 1.0).unwrap().eval(-0.1).is_err());
    }

    #[test]
    fn kernel_matrix_examples() {
        let ker = WendlandKernel::new(2, 1, 1.0).unwrap();
        assert_eq!(kernel_matrix(&ker, &[v(&[0.2, 0.1])]).unwrap()[(0, 0)], 1.0);
        let far = kernel_matrix(&ker, &[v(&[0.0, 0.0]), v(&[1.0, 0.0])]).unwrap();
        assert_eq!(far, Matrix::identity(2, 2));
        assert!(matches!(
            kernel_matrix(&ker, &[v(&[0.0, 0.0]), v(&[1.0, 0.0]), v(&[0.0, 0.0])]),
            Err(Error::DuplicateNodes(0, 2))
        ));
    }

    #[test]
    fn identity_map_gives_inverse_and_interpolates() {
        let ker = WendlandKernel::new(1, 1, 0.7).unwrap();
        let nodes: Vec<Vector> = (0..8).map(|i| v(&[i as f64 * 0.13])).collect();
        let sur = kedmd_fit(&ker, &nodes, &nodes).unwrap();
        let kx = kernel_matrix(&ker, &nodes).unwrap();
        let inv = kx.clone().try_inverse().unwrap();
        assert!((&sur.coefficients[0] - inv).amax() < 1e-9);
        for x in &nodes {
            let p = sur.predict_observable(x, &[]).unwrap();
            assert!((p - x).amax() < 1e-8);
        }
    }

    #[test]
    fn single_node_scalar_formula() {
        let ker = WendlandKernel::new(1, 2, 1.0).unwrap();
        let sur = kedmd_fit(&ker, &[v(&[0.0])], &[v(&[0.25])]).unwrap();
        assert_relative_eq!(sur.coefficients[0][(0, 0)], ker.eval(0.25).unwrap(), epsilon = 1e-15);
    }

    #[test]
    fn node_prediction_is_interpolant_at_successor() {
        let ker = WendlandKernel::new(1, 1, 0.5).unwrap();
        let nodes: Vec<Vector> = (0..6).map(|i| v(&[i as f64 * 0.2])).collect();
        let f = |x: &Vector| v(&[0.9 * x[0] + 0.05]);
        let succ: Vec<Vector> = nodes.iter().map(f).collect();
        let sur = kedmd_fit(&ker, &nodes, &succ).unwrap();
        let kx = kernel_matrix(&ker, &nodes).unwrap();
        let psi = Vector::from_iterator(nodes.len(), nodes.iter().map(|x| x[0]));
        let coef = kx.cholesky().unwrap().solve(&psi);
        for (x, y) in nodes.iter().zip(&succ) {
            let interp = ker.features(&nodes, y).dot(&coef);
            assert_relative_eq!(sur.predict_observable(x, &[]).unwrap()[0], interp, epsilon = 1e-10);
        }
    }

    #[test]
    fn control_with_zero_input_is_autonomous() {
        let ker = WendlandKernel::new(1, 1, 0.6).unwrap();
        let nodes: Vec<Vector> = (0..5).map(|i| v(&[i as f64 * 0.25])).collect();
        let g0: Vec<Vector> = nodes.iter().map(|x| v(&[0.8 * x[0]])).collect();
        let g1: Vec<Vector> = nodes.iter().map(|_| v(&[0.25])).collect();
        let ctl = kedmd_control_fit(&ker, &nodes, &[g0.clone(), g1]).unwrap();
        let aut = kedmd_fit(&ker, &nodes, &g0).unwrap();
        let x = v(&[0.4]);
        assert_relative_eq!(
            ctl.predict_observable(&x, &[0.0]).unwrap()[0],
            aut.predict_observable(&x, &[]).unwrap()[0],
            epsilon = 1e-14
        );
        assert!(ctl.predict_observable(&x, &[0.0, 1.0]).is_err());
    }

    #[test]
    fn fill_distance_examples() {
        let nodes = vec![v(&[0.0]), v(&[1.0])];
        let probes = box_grid(&[0.0], &[1.0], 101).unwrap();
        assert_relative_eq!(fill_distance(&nodes, &probes).unwrap(), 0.5, epsilon = 1e-12);
        assert!(fill_distance(&[], &probes).is_err());
        let grid = box_grid(&[0.0, 0.0], &[1.0, 1.0], 5).unwrap();
        let probes = box_grid(&[0.0, 0.0], &[1.0, 1.0], 81).unwrap();
        assert_relative_eq!(fill_distance(&grid, &probes).unwrap(), 2f64.sqrt() / 2.0 * 0.25, epsilon = 1e-12);
    }

    #[test]
    fn constant_c_examples() {
        let one = constant_c(&Matrix::from_element(1, 1, 1.0)).unwrap();
        assert_relative_eq!(one.value, 1.0, epsilon = 1e-15);
        assert!(one.exact);
        for d in [2, 5, 9] {
            let c = constant_c(&Matrix::identity(d, d)).unwrap();
            assert_relative_eq!(c.value, (d as f64).sqrt(), epsilon = 1e-12);
        }
        let big = constant_c(&Matrix::identity(25, 25)).unwrap();
        assert!(!big.exact);
        assert_relative_eq!(big.value, 5.0, epsilon = 1e-12);
    }

    #[test]
    fn bound_terms_monotone() {
        let t = KernelBoundTerms {
            fill_distance: 0.1,
            smoothness: 1,
            c: 2.0,
            kx_inv_norm: 10.0,
            cluster_radius: 1e-3,
            sigma_tilde: 1.0,
        };
        let base = t.evaluate(1.0, 1.0);
        assert!(KernelBoundTerms { cluster_radius: 2e-3, ..t }.evaluate(1.0, 1.0) > base);
        assert!(KernelBoundTerms { sigma_tilde: 2.0, ..t }.evaluate(1.0, 1.0) > base);
        assert!(t.radius_condition());
        assert!(!KernelBoundTerms { cluster_radius: 0.05, ..t }.radius_condition());
    }
}
