//! Piecewise-linear mixed Monge-Ampère calculus on the product grid.
//!
//! Each cell splits along its SW-NE diagonal into two triangles on which a
//! grid function is linear. The Monge-Ampère mass at an interior vertex is
//! the shoelace area of the hexagon traced by the six incident triangle
//! gradients (counterclockwise); mixed masses are the shoelace polarization
//! on the aligned fans. Summation by parts is exact in this calculus: the
//! trilinear pairing <a, dd^c b ^ dd^c c> is fully symmetric for pinned
//! arguments, which is what makes the energy identities hold to roundoff.
//!
//! Boundary vertices are completed against the slope-budget rectangle
//! `[0,B]^2`; the completion masses are lumped into four per-edge atoms. The
//! total mass of every wedge measure is identically 1 (a polynomial identity
//! in the node values, exercised in the tests).

use crate::grid::GridMeasure;
use crate::model::ModelSpace;

type P = (f64, f64);

#[inline]
fn cross(a: P, b: P) -> f64 {
    a.0 * b.1 - a.1 * b.0
}

/// Polarized shoelace: B(p, p) is the signed area of the ccw polygon p.
fn shoelace_pair(p: &[P], q: &[P]) -> f64 {
    let n = p.len();
    let mut s = 0.0;
    for k in 0..n {
        let k2 = (k + 1) % n;
        s += cross(p[k], q[k2]) + cross(q[k], p[k2]);
    }
    0.25 * s
}

/// Per-triangle gradients. Indexed by cell (i, j), i fast over x.
pub struct Fans {
    n: usize,
    gx_tl: Vec<f64>,
    gy_tl: Vec<f64>,
    gx_tu: Vec<f64>,
    gy_tu: Vec<f64>,
}

impl Fans {
    pub fn new(model: &ModelSpace, u: &[f64]) -> Fans {
        let n = model.grid.cells;
        let np = n + 1;
        let h = model.grid.spacing;
        let mut gx_tl = vec![0.0; n * n];
        let mut gy_tl = vec![0.0; n * n];
        let mut gx_tu = vec![0.0; n * n];
        let mut gy_tu = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let c = i * n + j;
                gx_tl[c] = (u[(i + 1) * np + j] - u[i * np + j]) / h;
                gy_tl[c] = (u[(i + 1) * np + j + 1] - u[(i + 1) * np + j]) / h;
                gx_tu[c] = (u[(i + 1) * np + j + 1] - u[i * np + j + 1]) / h;
                gy_tu[c] = (u[i * np + j + 1] - u[i * np + j]) / h;
            }
        }
        Fans {
            n,
            gx_tl,
            gy_tl,
            gx_tu,
            gy_tu,
        }
    }

    #[inline]
    fn tl(&self, i: usize, j: usize) -> P {
        let c = i * self.n + j;
        (self.gx_tl[c], self.gy_tl[c])
    }

    #[inline]
    fn tu(&self, i: usize, j: usize) -> P {
        let c = i * self.n + j;
        (self.gx_tu[c], self.gy_tu[c])
    }

    /// The six incident triangle gradients at interior vertex (i, j),
    /// counterclockwise starting from the east sector.
    #[inline]
    fn fan6(&self, i: usize, j: usize) -> [P; 6] {
        [
            self.tl(i, j),
            self.tu(i, j),
            self.tl(i - 1, j),
            self.tu(i - 1, j - 1),
            self.tl(i - 1, j - 1),
            self.tu(i, j - 1),
        ]
    }
}

/// Wedge measure V^{-1} n! (polarized determinant of ub, uc): interior vertex
/// masses plus the four per-edge completion lumps.
pub fn wedge_measure(model: &ModelSpace, ub: &[f64], uc: &[f64]) -> GridMeasure {
    let n = model.grid.cells;
    let np = n + 1;
    let v = model.volume;
    let b = model.axis_budget;
    let fb = Fans::new(model, ub);
    let fc = Fans::new(model, uc);
    let scale = 2.0 / v; // n! / V

    let mut weights = vec![0.0; np * np];
    for i in 1..n {
        for j in 1..n {
            let pb = fb.fan6(i, j);
            let pc = fc.fan6(i, j);
            weights[i * np + j] = scale * shoelace_pair(&pb, &pc);
        }
    }

    // completion polygons; atoms = [left, right, bottom, top], corners folded
    // into the left/right atoms.
    let mut atoms = [0.0_f64; 4];
    let pair5 = |pb: [P; 5], pc: [P; 5]| scale * shoelace_pair(&pb, &pc);
    let pair4 = |pb: [P; 4], pc: [P; 4]| scale * shoelace_pair(&pb, &pc);

    // left edge (0, j): fans ccw [TU(0,j-1), TL(0,j), TU(0,j)] closed on px = 0
    for j in 1..n {
        let poly = |f: &Fans| -> [P; 5] {
            let ga = f.tu(0, j - 1);
            let gb = f.tl(0, j);
            let gc = f.tu(0, j);
            [ga, gb, gc, (0.0, gc.1), (0.0, ga.1)]
        };
        atoms[0] += pair5(poly(&fb), poly(&fc));
    }
    // right edge (n, j): fans ccw [TL(n-1,j), TU(n-1,j-1), TL(n-1,j-1)] closed on px = B
    for j in 1..n {
        let poly = |f: &Fans| -> [P; 5] {
            let ga = f.tl(n - 1, j);
            let gb = f.tu(n - 1, j - 1);
            let gc = f.tl(n - 1, j - 1);
            [ga, gb, gc, (b, gc.1), (b, ga.1)]
        };
        atoms[1] += pair5(poly(&fb), poly(&fc));
    }
    // bottom edge (i, 0): fans ccw [TL(i,0), TU(i,0), TL(i-1,0)] closed on py = 0
    for i in 1..n {
        let poly = |f: &Fans| -> [P; 5] {
            let ga = f.tl(i, 0);
            let gb = f.tu(i, 0);
            let gc = f.tl(i - 1, 0);
            [ga, gb, gc, (gc.0, 0.0), (ga.0, 0.0)]
        };
        atoms[2] += pair5(poly(&fb), poly(&fc));
    }
    // top edge (i, n): fans ccw [TU(i-1,n-1), TL(i-1,n-1), TU(i,n-1)] closed on py = B
    for i in 1..n {
        let poly = |f: &Fans| -> [P; 5] {
            let ga = f.tu(i - 1, n - 1);
            let gb = f.tl(i - 1, n - 1);
            let gc = f.tu(i, n - 1);
            [ga, gb, gc, (gc.0, b), (ga.0, b)]
        };
        atoms[3] += pair5(poly(&fb), poly(&fc));
    }
    // corner (0,0): fans [TL(0,0), TU(0,0)] closed through the origin
    {
        let poly = |f: &Fans| -> [P; 5] {
            let ga = f.tl(0, 0);
            let gb = f.tu(0, 0);
            [ga, gb, (0.0, gb.1), (0.0, 0.0), (ga.0, 0.0)]
        };
        atoms[0] += pair5(poly(&fb), poly(&fc));
    }
    // corner (n,0): single fan [TL(n-1,0)] closed through (B, 0)
    {
        let poly = |f: &Fans| -> [P; 4] {
            let g = f.tl(n - 1, 0);
            [g, (g.0, 0.0), (b, 0.0), (b, g.1)]
        };
        atoms[1] += pair4(poly(&fb), poly(&fc));
    }
    // corner (0,n): single fan [TU(0,n-1)] closed through (0, B)
    {
        let poly = |f: &Fans| -> [P; 4] {
            let g = f.tu(0, n - 1);
            [g, (g.0, b), (0.0, b), (0.0, g.1)]
        };
        atoms[0] += pair4(poly(&fb), poly(&fc));
    }
    // corner (n,n): fans ccw [TU(n-1,n-1), TL(n-1,n-1)] closed through (B, B)
    {
        let poly = |f: &Fans| -> [P; 5] {
            let ga = f.tu(n - 1, n - 1);
            let gb = f.tl(n - 1, n - 1);
            [ga, gb, (b, gb.1), (b, b), (ga.0, b)]
        };
        atoms[1] += pair5(poly(&fb), poly(&fc));
    }

    GridMeasure {
        weights,
        atoms: atoms.to_vec(),
    }
}

/// Interior directional derivative of the vertex masses: row v of
/// d MA(u)/du applied to x, i.e. 2 * interior mixed masses of (u, x).
/// x enters linearly through its own fans, so one fan pass suffices.
pub fn ma_jacobian_apply(model: &ModelSpace, fu: &Fans, x: &[f64]) -> Vec<f64> {
    let n = model.grid.cells;
    let np = n + 1;
    let scale = 2.0 / model.volume;
    let fx = Fans::new(model, x);
    let mut out = vec![0.0; np * np];
    for i in 1..n {
        for j in 1..n {
            let pu = fu.fan6(i, j);
            let px = fx.fan6(i, j);
            out[i * np + j] = 2.0 * scale * shoelace_pair(&pu, &px);
        }
    }
    out
}
