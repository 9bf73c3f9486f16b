//! Algebraic model of the rectangles whose vertices lie on four given
//! segments.
//!
//! Vertices `R1, R2, R3` are placed on the lines `L1, L2, L3` by arclength
//! parameters `(t1, t2, t3)`; `R4 = R1 - R2 + R3` closes the parallelogram.
//! Requiring `R4` to lie on `L4` is one linear equation (the hyperplane),
//! the right angle at `R2` is one quadratic equation (the quadric), and the
//! solution set is a conic in the hyperplane. Clipping to the parameter box
//! `t_j in [0, len_j]` gives the rectangles gracing the segments.

use nalgebra::{Matrix3, Matrix4, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{LabeledRectangle, Point, Polygon};

/// Relative threshold for algebraic zero tests.
pub const ALG_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub anchor: Point,
    /// Unit direction.
    pub dir: Point,
    pub len: f64,
}

impl Segment {
    pub fn at(&self, t: f64) -> Point {
        self.anchor + self.dir * t
    }
}

/// Four segments, usually edges of a polygon (repeats allowed).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeQuadruple {
    pub idx: [usize; 4],
    pub seg: [Segment; 4],
}

impl EdgeQuadruple {
    pub fn from_polygon(p: &Polygon, idx: [usize; 4]) -> Self {
        let seg = idx.map(|i| {
            let e = p.edge(i);
            Segment { anchor: e.start, dir: e.dir, len: e.len }
        });
        Self { idx, seg }
    }

    pub fn from_segments(seg: [Segment; 4]) -> Self {
        Self { idx: [0, 1, 2, 3], seg }
    }

    pub fn max_len(&self) -> f64 {
        self.seg.iter().map(|s| s.len).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConicKind {
    Ellipse,
    Hyperbola,
    Parabola,
    CrossingLines,
    ParallelLines,
    SingleLine,
    DoubleLine,
    /// A single real point (imaginary line pair).
    Point,
    Empty,
    DegeneratePlane,
}

impl ConicKind {
    pub fn is_line_family(self) -> bool {
        matches!(
            self,
            ConicKind::CrossingLines
                | ConicKind::ParallelLines
                | ConicKind::SingleLine
                | ConicKind::DoubleLine
        )
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChartError {
    #[error("segments {0:?} are all parallel to the fourth; the hyperplane is not a graph")]
    AllParallelToL4([usize; 4]),
    #[error("chart {0:?} is degenerate: the quadric contains the hyperplane")]
    DegenerateChart([usize; 4]),
    #[error("parameters are off the hyperplane by {0:e}")]
    OffHyperplane(f64),
    #[error("singular point of the conic at {0:?}")]
    SingularPoint([f64; 3]),
}

/// A solution point of a chart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChartPoint {
    pub t: [f64; 3],
    pub t4: f64,
    pub rect: LabeledRectangle,
    pub in_box: bool,
}

/// A parametrized real piece of the reduced conic, in scaled coordinates.
#[derive(Debug, Clone, Copy)]
enum Piece {
    /// `center + rot * (a cos th, b sin th)`
    Ellipse { center: [f64; 2], rot: [[f64; 2]; 2], a: f64, b: f64 },
    /// `center + rot * (sign a cosh u, b sinh u)`
    Hyperbola { center: [f64; 2], rot: [[f64; 2]; 2], a: f64, b: f64, sign: f64 },
    /// `origin + rot * (u, k2 u^2 + k1 u + k0)`
    Parabola { origin: [f64; 2], rot: [[f64; 2]; 2], k: [f64; 3] },
    /// `p + u d`
    Line { p: [f64; 2], d: [f64; 2] },
}

impl Piece {
    fn local(&self, u: f64) -> ([f64; 2], [[f64; 2]; 2], [f64; 2]) {
        match *self {
            Piece::Ellipse { center, rot, a, b } => (center, rot, [a * u.cos(), b * u.sin()]),
            Piece::Hyperbola { center, rot, a, b, sign } => {
                (center, rot, [sign * a * u.cosh(), b * u.sinh()])
            }
            Piece::Parabola { origin, rot, k } => (origin, rot, [u, k[2] * u * u + k[1] * u + k[0]]),
            Piece::Line { p, d } => (p, [[1.0, 0.0], [0.0, 1.0]], [u * d[0], u * d[1]]),
        }
    }

    fn eval(&self, u: f64) -> [f64; 2] {
        let (c, r, w) = self.local(u);
        [c[0] + r[0][0] * w[0] + r[0][1] * w[1], c[1] + r[1][0] * w[0] + r[1][1] * w[1]]
    }

    fn periodic(&self) -> bool {
        matches!(self, Piece::Ellipse { .. })
    }

    /// Parameters where `g0 + g . p(u) = 0`.
    fn linear_roots(&self, g0: f64, g: [f64; 2]) -> Vec<f64> {
        let (c, r, _) = self.local(0.0);
        // g . (c + r w) = g.c + (r^T g) . w
        let h0 = g0 + g[0] * c[0] + g[1] * c[1];
        let h = [r[0][0] * g[0] + r[1][0] * g[1], r[0][1] * g[0] + r[1][1] * g[1]];
        match *self {
            Piece::Ellipse { a, b, .. } => {
                let (aa, bb) = (h[0] * a, h[1] * b);
                let rr = aa.hypot(bb);
                if rr == 0.0 || h0.abs() > rr {
                    return vec![];
                }
                let base = bb.atan2(aa);
                let off = (-h0 / rr).clamp(-1.0, 1.0).acos();
                vec![
                    (base + off).rem_euclid(std::f64::consts::TAU),
                    (base - off).rem_euclid(std::f64::consts::TAU),
                ]
            }
            Piece::Hyperbola { a, b, sign, .. } => {
                let p = h[0] * sign * a;
                let q = h[1] * b;
                quadratic_roots(p + q, 2.0 * h0, p - q)
                    .into_iter()
                    .filter(|&e| e > 0.0)
                    .map(f64::ln)
                    .collect()
            }
            Piece::Parabola { k, .. } => {
                quadratic_roots(h[1] * k[2], h[0] + h[1] * k[1], h0 + h[1] * k[0])
            }
            Piece::Line { d, .. } => {
                let s = g[0] * d[0] + g[1] * d[1];
                if s == 0.0 {
                    vec![]
                } else {
                    vec![-h0 / s]
                }
            }
        }
    }
}

/// Real roots of `a x^2 + b x + c`.
fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    let scale = a.abs().max(b.abs()).max(c.abs());
    if scale == 0.0 {
        return vec![];
    }
    if a.abs() <= 1e-14 * scale {
        return if b == 0.0 { vec![] } else { vec![-c / b] };
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return vec![];
    }
    let sq = disc.sqrt();
    let q = -0.5 * (b + b.signum() * sq);
    if q == 0.0 {
        return vec![0.0];
    }
    vec![q / a, c / q]
}

/// The chart of one edge quadruple.
#[derive(Debug, Clone)]
pub struct Chart {
    pub quad: EdgeQuadruple,
    /// Hyperplane `c0 + c1 t1 + c2 t2 + c3 t3 = 0`.
    pub c: [f64; 4],
    /// Homogeneous quadratic form of the right-angle condition in `(t1, t2, t3, 1)`.
    pub q: Matrix4<f64>,
    /// Index (0-based, among t1..t3) of the eliminated parameter.
    pub k: usize,
    /// Remaining free parameters.
    pub free: [usize; 2],
    /// Reduced conic in homogeneous `(t_free0, t_free1, 1)`.
    pub reduced: Matrix3<f64>,
    pub kind: ConicKind,
    /// Absolute residual tolerance `1e-9 (1 + max len)^2`.
    pub eps_alg: f64,
    /// Length scale `1 + max len`.
    pub scale: f64,
    pieces: Vec<Piece>,
}

impl Chart {
    pub fn build(quad: EdgeQuadruple) -> Result<Chart, ChartError> {
        let [s1, s2, s3, s4] = quad.seg;
        let (u1, u2, u3, u4) = (s1.dir, s2.dir, s3.dir, s4.dir);
        let base = s1.anchor - s2.anchor + s3.anchor - s4.anchor;
        let c = [base.cross(u4), u1.cross(u4), -u2.cross(u4), u3.cross(u4)];

        let alpha = [u1, -u2, Point::ORIGIN, s1.anchor - s2.anchor];
        let beta = [Point::ORIGIN, -u2, u3, s3.anchor - s2.anchor];
        let q = Matrix4::from_fn(|i, j| 0.5 * (alpha[i].dot(beta[j]) + alpha[j].dot(beta[i])));

        let scale = 1.0 + quad.max_len();
        let eps_alg = ALG_REL_TOL * scale * scale;

        let k = (0..3)
            .max_by(|&a, &b| c[a + 1].abs().partial_cmp(&c[b + 1].abs()).unwrap())
            .unwrap();
        if c[k + 1].abs() <= ALG_REL_TOL {
            return Err(ChartError::AllParallelToL4(quad.idx));
        }
        let free = match k {
            0 => [1, 2],
            1 => [0, 2],
            _ => [0, 1],
        };
        let lift = Self::lift_matrix(&c, k, free);
        let reduced = lift.transpose() * q * lift;

        let mut chart = Chart {
            quad,
            c,
            q,
            k,
            free,
            reduced,
            kind: ConicKind::Empty,
            eps_alg,
            scale,
            pieces: vec![],
        };
        let (kind, pieces) = chart.classify();
        chart.kind = kind;
        chart.pieces = pieces;
        Ok(chart)
    }

    /// 4x3 matrix taking `(s0, s1, 1)` to homogeneous `(t1, t2, t3, 1)`.
    fn lift_matrix(c: &[f64; 4], k: usize, free: [usize; 2]) -> nalgebra::Matrix4x3<f64> {
        let mut m = nalgebra::Matrix4x3::zeros();
        m[(free[0], 0)] = 1.0;
        m[(free[1], 1)] = 1.0;
        let ck = c[k + 1];
        m[(k, 0)] = -c[free[0] + 1] / ck;
        m[(k, 1)] = -c[free[1] + 1] / ck;
        m[(k, 2)] = -c[0] / ck;
        m[(3, 2)] = 1.0;
        m
    }

    /// Full parameters from the two free ones.
    pub fn lift(&self, s: [f64; 2]) -> [f64; 3] {
        let mut t = [0.0; 3];
        t[self.free[0]] = s[0];
        t[self.free[1]] = s[1];
        let ck = self.c[self.k + 1];
        t[self.k] = -(self.c[0] + self.c[self.free[0] + 1] * s[0] + self.c[self.free[1] + 1] * s[1]) / ck;
        t
    }

    pub fn pi_residual(&self, t: [f64; 3]) -> f64 {
        self.c[0] + self.c[1] * t[0] + self.c[2] * t[1] + self.c[3] * t[2]
    }

    fn sides(&self, t: [f64; 3]) -> (Point, Point) {
        let [s1, s2, s3, _] = self.quad.seg;
        let r2 = s2.at(t[1]);
        (s1.at(t[0]) - r2, s3.at(t[2]) - r2)
    }

    /// `(R1 - R2) . (R3 - R2)`.
    pub fn q_value(&self, t: [f64; 3]) -> f64 {
        let (a, b) = self.sides(t);
        a.dot(b)
    }

    pub fn grad_q(&self, t: [f64; 3]) -> [f64; 3] {
        let [s1, s2, s3, _] = self.quad.seg;
        let (a, b) = self.sides(t);
        [s1.dir.dot(b), -s2.dir.dot(a + b), s3.dir.dot(a)]
    }

    pub fn grad_pi(&self) -> [f64; 3] {
        [self.c[1], self.c[2], self.c[3]]
    }

    /// Hessian of `Q` in `(t1, t2, t3)`.
    pub fn hessian_q(&self) -> Matrix3<f64> {
        self.q.fixed_view::<3, 3>(0, 0) * 2.0
    }

    /// Position of `R4` along `L4`.
    pub fn t4(&self, t: [f64; 3]) -> f64 {
        let [s1, s2, s3, s4] = self.quad.seg;
        (s1.at(t[0]) - s2.at(t[1]) + s3.at(t[2]) - s4.anchor).dot(s4.dir)
    }

    /// The parallelogram at `t`; a rectangle when `Q(t) = 0`.
    pub fn rect(&self, t: [f64; 3]) -> LabeledRectangle {
        let [s1, s2, s3, _] = self.quad.seg;
        LabeledRectangle::from_three(s1.at(t[0]), s2.at(t[1]), s3.at(t[2]))
    }

    pub fn point_from_params(&self, t: [f64; 3]) -> Result<LabeledRectangle, ChartError> {
        let r = self.pi_residual(t);
        if r.abs() > self.eps_alg {
            return Err(ChartError::OffHyperplane(r));
        }
        Ok(self.rect(t))
    }

    pub fn chart_point(&self, t: [f64; 3], tol: f64) -> ChartPoint {
        ChartPoint { t, t4: self.t4(t), rect: self.rect(t), in_box: self.in_box(t, tol) }
    }

    /// The eight box-wall values `t_j` and `len_j - t_j`, ordered
    /// `[t1, len1 - t1, t2, len2 - t2, ...]`; all nonnegative inside the box.
    pub fn wall_values(&self, t: [f64; 3]) -> [f64; 8] {
        let t4 = self.t4(t);
        let s = &self.quad.seg;
        [t[0], s[0].len - t[0], t[1], s[1].len - t[1], t[2], s[2].len - t[2], t4, s[3].len - t4]
    }

    pub fn in_box(&self, t: [f64; 3], tol: f64) -> bool {
        self.wall_values(t).iter().all(|&w| w >= -tol)
    }

    /// Unit tangent of the solution curve at `t`, signed to agree with `prev`
    /// when given, else with its largest component positive.
    pub fn tangent_at(&self, t: [f64; 3], prev: Option<[f64; 3]>) -> Result<[f64; 3], ChartError> {
        let n1 = Vector3::from(self.grad_pi());
        let n2 = Vector3::from(self.grad_q(t));
        let tau = n1.cross(&n2);
        if tau.norm() <= ALG_REL_TOL * n1.norm() * self.scale {
            return Err(ChartError::SingularPoint(t));
        }
        let mut tau = tau.normalize();
        match prev {
            Some(p) => {
                if tau.dot(&Vector3::from(p)) < 0.0 {
                    tau = -tau;
                }
            }
            None => {
                let m = tau.iamax();
                if tau[m] < 0.0 {
                    tau = -tau;
                }
            }
        }
        Ok([tau[0], tau[1], tau[2]])
    }

    /// Branch directions (both signs of each) through a node of the conic.
    pub fn node_directions(&self) -> Vec<[f64; 3]> {
        let n = Vector3::from(self.grad_pi()).normalize();
        let m = n.iamin();
        let mut e = Vector3::zeros();
        e[m] = 1.0;
        let b1 = n.cross(&e).normalize();
        let b2 = n.cross(&b1);
        let h = self.hessian_q();
        let m11 = b1.dot(&(h * b1));
        let m12 = b1.dot(&(h * b2));
        let m22 = b2.dot(&(h * b2));
        let scale = m11.abs().max(m12.abs()).max(m22.abs());
        if scale == 0.0 {
            return vec![];
        }
        let disc = m12 * m12 - m11 * m22;
        if disc < -ALG_REL_TOL * scale * scale {
            return vec![];
        }
        let sq = disc.max(0.0).sqrt();
        let dirs: Vec<(f64, f64)> = if m11.abs() >= m22.abs() {
            vec![((-m12 + sq) / m11, 1.0), ((-m12 - sq) / m11, 1.0)]
        } else {
            vec![(1.0, (-m12 + sq) / m22), (1.0, (-m12 - sq) / m22)]
        };
        let mut out = Vec::new();
        for (x, y) in dirs {
            let d = (b1 * x + b2 * y).normalize();
            out.push([d[0], d[1], d[2]]);
            out.push([-d[0], -d[1], -d[2]]);
        }
        out
    }

    /// Reduced conic in scaled coordinates `s = L * s_hat`, normalized to unit
    /// Frobenius norm, together with the raw norm.
    fn scaled_reduced(&self) -> (Matrix3<f64>, f64) {
        let l = self.scale;
        let d = [l, l, 1.0];
        let m = Matrix3::from_fn(|i, j| self.reduced[(i, j)] * d[i] * d[j] / (l * l));
        let norm = m.norm();
        if norm == 0.0 {
            (m, 0.0)
        } else {
            (m / norm, norm)
        }
    }

    fn classify(&self) -> (ConicKind, Vec<Piece>) {
        let (m, norm) = self.scaled_reduced();
        if norm <= ALG_REL_TOL {
            return (ConicKind::DegeneratePlane, vec![]);
        }
        let tol = ALG_REL_TOL;
        let a2 = nalgebra::Matrix2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
        let b = [m[(0, 2)], m[(1, 2)]];
        let c0 = m[(2, 2)];
        let eig3 = SymmetricEigen::new(m);
        let rank3 = eig3.eigenvalues.iter().filter(|v| v.abs() > tol).count();
        let eig2 = SymmetricEigen::new(a2);
        let (l1, l2) = (eig2.eigenvalues[0], eig2.eigenvalues[1]);
        let rot = [
            [eig2.eigenvectors[(0, 0)], eig2.eigenvectors[(0, 1)]],
            [eig2.eigenvectors[(1, 0)], eig2.eigenvectors[(1, 1)]],
        ];
        let z1 = l1.abs() <= tol;
        let z2 = l2.abs() <= tol;
        // rotated linear part: b' = R^T b
        let bp = [rot[0][0] * b[0] + rot[1][0] * b[1], rot[0][1] * b[0] + rot[1][1] * b[1]];

        if !z1 && !z2 {
            // central conic
            let inv = a2.try_inverse().unwrap();
            let ctr = -(inv * nalgebra::Vector2::new(b[0], b[1]));
            let center = [ctr[0], ctr[1]];
            let cp = c0 + b[0] * ctr[0] + b[1] * ctr[1];
            if l1 * l2 > 0.0 {
                if cp.abs() <= tol {
                    return (ConicKind::Point, vec![]);
                }
                if cp * l1 > 0.0 {
                    return (ConicKind::Empty, vec![]);
                }
                let a = (-cp / l1).sqrt();
                let bb = (-cp / l2).sqrt();
                return (ConicKind::Ellipse, vec![Piece::Ellipse { center, rot, a, b: bb }]);
            }
            if cp.abs() <= tol || rank3 < 3 {
                // crossing lines through the center: l1 w1^2 + l2 w2^2 = 0
                let (w1, w2) = (1.0 / l1.abs().sqrt(), 1.0 / l2.abs().sqrt());
                let mut pieces = vec![];
                for sgn in [1.0, -1.0] {
                    let lw = [w1, sgn * w2];
                    let d = [rot[0][0] * lw[0] + rot[0][1] * lw[1], rot[1][0] * lw[0] + rot[1][1] * lw[1]];
                    let dn = d[0].hypot(d[1]);
                    pieces.push(Piece::Line { p: center, d: [d[0] / dn, d[1] / dn] });
                }
                return (ConicKind::CrossingLines, pieces);
            }
            // l1 w1^2 + l2 w2^2 = -cp
            let (pos, neg) = if l1 > 0.0 { (l1, l2) } else { (l2, l1) };
            let pieces = if -cp > 0.0 {
                // w_pos = +-a cosh u, w_neg = b sinh u
                let a = (-cp / pos).sqrt();
                let bb = (-cp / -neg).sqrt();
                let r = if l1 > 0.0 { rot } else { [[rot[0][1], rot[0][0]], [rot[1][1], rot[1][0]]] };
                vec![
                    Piece::Hyperbola { center, rot: r, a, b: bb, sign: 1.0 },
                    Piece::Hyperbola { center, rot: r, a, b: bb, sign: -1.0 },
                ]
            } else {
                let a = (cp / -neg).sqrt();
                let bb = (cp / pos).sqrt();
                let r = if l1 < 0.0 { rot } else { [[rot[0][1], rot[0][0]], [rot[1][1], rot[1][0]]] };
                vec![
                    Piece::Hyperbola { center, rot: r, a, b: bb, sign: 1.0 },
                    Piece::Hyperbola { center, rot: r, a, b: bb, sign: -1.0 },
                ]
            };
            return (ConicKind::Hyperbola, pieces);
        }

        if z1 && z2 {
            // linear: 2 b.s + c0 = 0
            let bn = b[0].hypot(b[1]);
            if bn <= tol {
                return (ConicKind::Empty, vec![]);
            }
            let d = [-b[1] / bn, b[0] / bn];
            let p = [-c0 * b[0] / (2.0 * bn * bn), -c0 * b[1] / (2.0 * bn * bn)];
            return (ConicKind::SingleLine, vec![Piece::Line { p, d }]);
        }

        // one vanishing eigenvalue; put the nonzero one first
        let (lam, bw, bz, r) = if !z1 {
            (l1, bp[0], bp[1], rot)
        } else {
            (l2, bp[1], bp[0], [[rot[0][1], rot[0][0]], [rot[1][1], rot[1][0]]])
        };
        // lam w^2 + 2 bw w + 2 bz z + c0 = 0 in rotated (w, z)
        if bz.abs() > tol {
            let k = [-c0 / (2.0 * bz), -bw / bz, -lam / (2.0 * bz)];
            return (ConicKind::Parabola, vec![Piece::Parabola { origin: [0.0, 0.0], rot: r, k }]);
        }
        let disc = bw * bw - lam * c0;
        let dir = [r[0][1], r[1][1]];
        let line_at = |w: f64| Piece::Line { p: [r[0][0] * w, r[1][0] * w], d: dir };
        if disc.abs() <= tol {
            return (ConicKind::DoubleLine, vec![line_at(-bw / lam)]);
        }
        if disc < 0.0 {
            return (ConicKind::Empty, vec![]);
        }
        let sq = disc.sqrt();
        (
            ConicKind::ParallelLines,
            vec![line_at((-bw + sq) / lam), line_at((-bw - sq) / lam)],
        )
    }

    /// Box walls as affine functions of the scaled free parameters.
    fn walls_scaled(&self) -> Vec<(f64, [f64; 2])> {
        let l = self.scale;
        let base = self.lift([0.0, 0.0]);
        let e0 = self.lift([l, 0.0]);
        let e1 = self.lift([0.0, l]);
        let tf = |t: [f64; 3]| {
            let mut v = t.to_vec();
            v.push(self.t4(t));
            v
        };
        let (v0, v1, v2) = (tf(base), tf(e0), tf(e1));
        let mut out = vec![];
        for j in 0..4 {
            let g = [v1[j] - v0[j], v2[j] - v0[j]];
            out.push((v0[j], g));
            out.push((self.quad.seg[j].len - v0[j], [-g[0], -g[1]]));
        }
        out
    }

    fn t_of_scaled(&self, s: [f64; 2]) -> [f64; 3] {
        self.lift([s[0] * self.scale, s[1] * self.scale])
    }

    /// Real pieces of the conic clipped to the box, each sampled as a chain of
    /// `samples >= 2` points ordered along the conic.
    pub fn components(&self, samples: usize) -> Result<Vec<Vec<ChartPoint>>, ChartError> {
        if self.kind == ConicKind::DegeneratePlane {
            return Err(ChartError::DegenerateChart(self.quad.idx));
        }
        let samples = samples.max(2);
        let walls = self.walls_scaled();
        let tol_in = 1e-12 * self.scale;
        let inside = |s: [f64; 2]| walls.iter().all(|(g0, g)| g0 + g[0] * s[0] + g[1] * s[1] >= -tol_in);
        let mut out = vec![];
        for piece in &self.pieces {
            let mut roots: Vec<f64> = walls.iter().flat_map(|(g0, g)| piece.linear_roots(*g0, *g)).collect();
            roots.retain(|r| r.is_finite());
            roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
            roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * (1.0 + a.abs()));
            let mut intervals: Vec<(f64, f64)> = vec![];
            if piece.periodic() {
                let tau = std::f64::consts::TAU;
                if roots.is_empty() {
                    if inside(piece.eval(0.0)) {
                        intervals.push((0.0, tau));
                    }
                } else {
                    let n = roots.len();
                    for i in 0..n {
                        let a = roots[i];
                        let b = if i + 1 < n { roots[i + 1] } else { roots[0] + tau };
                        if b - a > 1e-12 && inside(piece.eval(0.5 * (a + b))) {
                            intervals.push((a, b));
                        }
                    }
                }
            } else {
                for w in roots.windows(2) {
                    let (a, b) = (w[0], w[1]);
                    if b - a > 1e-12 * (1.0 + a.abs()) && inside(piece.eval(0.5 * (a + b))) {
                        intervals.push((a, b));
                    }
                }
            }
            for (a, b) in intervals {
                let chain = (0..samples)
                    .map(|i| {
                        let u = a + (b - a) * i as f64 / (samples - 1) as f64;
                        let t = self.t_of_scaled(piece.eval(u));
                        self.chart_point(t, 1e-9 * self.scale)
                    })
                    .collect();
                out.push(chain);
            }
        }
        Ok(out)
    }

    /// True when the chart carries a continuum of isometric rectangles: the
    /// quadric contains the hyperplane, or an in-box line of the conic keeps
    /// `(X, Y)` constant.
    pub fn detect_degenerate(&self) -> bool {
        if self.kind == ConicKind::DegeneratePlane {
            return true;
        }
        if !self.kind.is_line_family() {
            return false;
        }
        let Ok(comps) = self.components(5) else {
            return true;
        };
        let tol = 1e-9 * self.scale;
        comps.iter().any(|chain| {
            let (x0, y0) = (chain[0].rect.x, chain[0].rect.y);
            let last = chain.last().unwrap().rect;
            let span = chain[0].rect.distance(&last);
            span > tol
                && chain.iter().all(|p| (p.rect.x - x0).abs() <= tol && (p.rect.y - y0).abs() <= tol)
        })
    }
}

/// Degeneracy of a quadruple that may not admit a chart: all four segments
/// parallel always carries sliding (isometric) degenerate rectangles.
pub fn detect_degenerate(quad: &EdgeQuadruple) -> bool {
    match Chart::build(*quad) {
        Ok(chart) => chart.detect_degenerate(),
        Err(ChartError::AllParallelToL4(_)) => true,
        Err(_) => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(ax: f64, ay: f64, dx: f64, dy: f64, len: f64) -> Segment {
        let d = Point::new(dx, dy).normalized();
        Segment { anchor: Point::new(ax, ay), dir: d, len }
    }

    pub(crate) fn square_lines() -> EdgeQuadruple {
        EdgeQuadruple::from_segments([
            seg(0.0, 0.0, 1.0, 0.0, 2.0),
            seg(2.0, 0.0, 0.0, 1.0, 2.0),
            seg(0.0, 2.0, 1.0, 0.0, 2.0),
            seg(0.0, 0.0, 0.0, 1.0, 2.0),
        ])
    }

    #[test]
    fn square_lines_hyperplane_and_kind() {
        let ch = Chart::build(square_lines()).unwrap();
        assert_eq!(ch.c, [-2.0, 1.0, 0.0, 1.0]);
        assert_eq!(ch.kind, ConicKind::CrossingLines);
        assert!(!ch.detect_degenerate());
    }

    #[test]
    fn square_lines_branches_are_the_two_diagonals() {
        let ch = Chart::build(square_lines()).unwrap();
        for h in [0.0, 0.3, 1.7, 2.0] {
            // t2 = t1 and t2 = 2 - t1, with t3 = 2 - t1 on the hyperplane
            for t in [[h, h, 2.0 - h], [h, 2.0 - h, 2.0 - h]] {
                assert!(ch.pi_residual(t).abs() < 1e-15);
                assert!(ch.q_value(t).abs() < 1e-14);
                assert!(ch.rect(t).is_valid(1e-12));
            }
        }
        let comps = ch.components(9).unwrap();
        assert_eq!(comps.len(), 2);
        for chain in &comps {
            for p in chain {
                assert!(p.in_box);
                let t = p.t;
                assert!((t[1] - t[0]).abs() < 1e-9 || (t[1] - (2.0 - t[0])).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn point_from_params_examples() {
        let ch = Chart::build(square_lines()).unwrap();
        let r = ch.point_from_params([1.0, 1.0, 1.0]).unwrap();
        assert_eq!(r.v, [Point::new(1.0, 0.0), Point::new(2.0, 1.0), Point::new(1.0, 2.0), Point::new(0.0, 1.0)]);
        assert!((r.x - 2f64.sqrt()).abs() < 1e-15 && (r.y - 2f64.sqrt()).abs() < 1e-15);
        let d = ch.point_from_params([0.0, 0.0, 2.0]).unwrap();
        assert_eq!(d.v, [Point::new(0.0, 0.0), Point::new(2.0, 0.0), Point::new(2.0, 2.0), Point::new(0.0, 2.0)]);
        assert_eq!(ch.q_value([0.0, 0.0, 2.0]), 0.0);
        assert!(matches!(ch.point_from_params([1.0, 1.0, 1.5]), Err(ChartError::OffHyperplane(_))));
    }

    #[test]
    fn tangent_on_line_and_at_node() {
        let ch = Chart::build(square_lines()).unwrap();
        let t = ch.tangent_at([0.4, 0.4, 1.6], Some([1.0, 1.0, -1.0])).unwrap();
        let e = 1.0 / 3f64.sqrt();
        for (a, b) in t.iter().zip([e, e, -e]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(matches!(ch.tangent_at([1.0, 1.0, 1.0], None), Err(ChartError::SingularPoint(_))));
        let dirs = ch.node_directions();
        assert_eq!(dirs.len(), 4);
        for d in dirs {
            let p = [1.0 + 0.5 * d[0], 1.0 + 0.5 * d[1], 1.0 + 0.5 * d[2]];
            assert!(ch.q_value(p).abs() < 1e-12 && ch.pi_residual(p).abs() < 1e-12);
        }
    }

    #[test]
    fn all_horizontal_segments_cannot_be_charted() {
        let q = EdgeQuadruple::from_segments([
            seg(0.0, 0.0, 1.0, 0.0, 1.0),
            seg(0.0, 0.0, 1.0, 0.0, 1.0),
            seg(1.0, 1.0, -1.0, 0.0, 1.0),
            seg(1.0, 1.0, -1.0, 0.0, 1.0),
        ]);
        assert!(matches!(Chart::build(q), Err(ChartError::AllParallelToL4(_))));
        // parallel opposite segments with a sliding doubled chord
        assert!(detect_degenerate(&q));
    }

    #[test]
    fn doubled_edges_give_degenerate_plane() {
        // R1 = R2 on one line, R3 = R4 on a crossing line
        let q = EdgeQuadruple::from_segments([
            seg(0.0, 0.0, 1.0, 0.0, 2.0),
            seg(0.0, 0.0, 1.0, 0.0, 2.0),
            seg(0.0, 1.0, 1.0, 1.0, 2.0),
            seg(0.0, 1.0, 1.0, 1.0, 2.0),
        ]);
        let ch = Chart::build(q).unwrap();
        assert_eq!(ch.kind, ConicKind::DegeneratePlane);
        assert!(ch.detect_degenerate());
        assert!(matches!(ch.components(4), Err(ChartError::DegenerateChart(_))));
    }

    #[test]
    fn perturbed_square_lines_coefficients() {
        let mut q = square_lines();
        q.seg[3] = seg(0.0, 0.0, 0.6, 0.8, 2.0);
        let ch = Chart::build(q).unwrap();
        let want = [-2.8, 0.8, 0.6, 0.8];
        for (a, b) in ch.c.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(!ch.kind.is_line_family());
        assert!(!ch.detect_degenerate());
    }

    #[test]
    fn quadratic_roots_are_stable() {
        let r = quadratic_roots(1.0, -3.0, 2.0);
        assert!(r.iter().any(|x| (x - 1.0).abs() < 1e-15));
        assert!(r.iter().any(|x| (x - 2.0).abs() < 1e-15));
        assert!(quadratic_roots(1.0, 0.0, 1.0).is_empty());
        assert_eq!(quadratic_roots(0.0, 2.0, -4.0), vec![2.0]);
    }
}
