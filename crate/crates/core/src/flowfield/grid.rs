use std::io::{BufRead, Write};

use super::{FlowError, FlowField, PathOrder};
use crate::geom::{Domain, Vec2};

/// Node-sampled current on a regular grid, bilinearly interpolated.
///
/// Node `(i, j)` sits at `origin + (i*dx, j*dy)` and is stored at `j*n_x + i`.
/// A cell is masked when any of its four corner nodes is masked.
#[derive(Clone, Debug, PartialEq)]
pub struct GriddedField {
    origin: Vec2,
    dx: f64,
    dy: f64,
    n_x: usize,
    n_y: usize,
    u: Vec<f64>,
    v: Vec<f64>,
    mask: Vec<bool>,
    domain: Domain,
}

impl GriddedField {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        origin: Vec2,
        dx: f64,
        dy: f64,
        n_x: usize,
        n_y: usize,
        u: Vec<f64>,
        v: Vec<f64>,
        mask: Vec<bool>,
    ) -> Result<Self, FlowError> {
        if !origin.is_finite() {
            return Err(FlowError::InvalidParameter(
                "grid origin must be finite".into(),
            ));
        }
        if !(dx > 0.0 && dy > 0.0 && dx.is_finite() && dy.is_finite()) {
            return Err(FlowError::InvalidParameter(format!(
                "grid spacing must be positive, got dx={dx} dy={dy}"
            )));
        }
        if n_x < 2 || n_y < 2 {
            return Err(FlowError::InvalidParameter(format!(
                "grid needs at least 2x2 nodes, got {n_x}x{n_y}"
            )));
        }
        let n = n_x * n_y;
        for len in [u.len(), v.len(), mask.len()] {
            if len != n {
                return Err(FlowError::DimensionMismatch {
                    expected: n,
                    found: len,
                });
            }
        }
        if u.iter().chain(v.iter()).any(|c| !c.is_finite()) {
            return Err(FlowError::InvalidParameter(
                "grid velocities must be finite".into(),
            ));
        }
        let domain = Domain::new(
            origin.x,
            origin.x + (n_x - 1) as f64 * dx,
            origin.y,
            origin.y + (n_y - 1) as f64 * dy,
        )
        .ok_or_else(|| FlowError::InvalidParameter("degenerate grid extent".into()))?;
        Ok(GriddedField {
            origin,
            dx,
            dy,
            n_x,
            n_y,
            u,
            v,
            mask,
            domain,
        })
    }

    /// Samples another field at every node. Nodes where `source` fails are masked
    /// and given zero velocity.
    pub fn sample_from<F: FlowField + ?Sized>(
        source: &F,
        origin: Vec2,
        dx: f64,
        dy: f64,
        n_x: usize,
        n_y: usize,
    ) -> Result<Self, FlowError> {
        let n = n_x * n_y;
        let (mut u, mut v, mut mask) = (
            Vec::with_capacity(n),
            Vec::with_capacity(n),
            Vec::with_capacity(n),
        );
        for j in 0..n_y {
            for i in 0..n_x {
                let p = origin + Vec2::new(i as f64 * dx, j as f64 * dy);
                match source.velocity_at(p) {
                    Ok(f) => {
                        u.push(f.x);
                        v.push(f.y);
                        mask.push(false);
                    }
                    Err(_) => {
                        u.push(0.0);
                        v.push(0.0);
                        mask.push(true);
                    }
                }
            }
        }
        GriddedField::new(origin, dx, dy, n_x, n_y, u, v, mask)
    }

    pub fn origin(&self) -> Vec2 {
        self.origin
    }

    pub fn spacing(&self) -> (f64, f64) {
        (self.dx, self.dy)
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.n_x, self.n_y)
    }

    pub fn node(&self, i: usize, j: usize) -> (Vec2, bool) {
        let k = j * self.n_x + i;
        (Vec2::new(self.u[k], self.v[k]), self.mask[k])
    }

    /// Stream value along a chosen axis-aligned path. Comparing both orders
    /// exposes how far the data is from divergence free.
    pub fn stream_value_with_order(
        &self,
        p: Vec2,
        q: Vec2,
        order: PathOrder,
    ) -> Result<f64, FlowError> {
        let corner = match order {
            PathOrder::XFirst => Vec2::new(q.x, p.y),
            PathOrder::YFirst => Vec2::new(p.x, q.y),
        };
        Ok(self.axis_flux(p, corner)? + self.axis_flux(corner, q)?)
    }

    /// Flux `u dy - v dx` across an axis-aligned segment. Along a grid-aligned
    /// line the interpolant is linear between grid lines, so trapezoids with
    /// breakpoints on those lines (each halved to honour the step bound) are exact.
    fn axis_flux(&self, a: Vec2, b: Vec2) -> Result<f64, FlowError> {
        let d = b - a;
        if d.x == 0.0 && d.y == 0.0 {
            self.velocity_at(a)?;
            return Ok(0.0);
        }
        let (lo, hi, origin, step) = if d.y == 0.0 {
            (a.x, b.x, self.origin.x, self.dx)
        } else {
            (a.y, b.y, self.origin.y, self.dy)
        };
        let mut ts = vec![0.0, 1.0];
        let first = ((lo.min(hi) - origin) / step).ceil() as i64;
        let last = ((lo.max(hi) - origin) / step).floor() as i64;
        for k in first..=last {
            let t = (origin + k as f64 * step - lo) / (hi - lo);
            if t > 0.0 && t < 1.0 {
                ts.push(t);
            }
        }
        ts.sort_by(f64::total_cmp);
        let flux = |t: f64| -> Result<f64, FlowError> {
            let f = self.velocity_at(a.lerp(b, t))?;
            Ok(f.x * d.y - f.y * d.x)
        };
        let mut sum = 0.0;
        let mut prev = flux(0.0)?;
        for w in ts.windows(2) {
            let mid = flux(0.5 * (w[0] + w[1]))?;
            let next = flux(w[1])?;
            sum += 0.25 * (w[1] - w[0]) * (prev + 2.0 * mid + next);
            prev = next;
        }
        Ok(sum)
    }

    /// Writes the field in the `FLOWGRID` text format accepted by [`load_grid`].
    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(
            out,
            "FLOWGRID {} {} {} {} {} {}",
            self.n_x, self.n_y, self.origin.x, self.origin.y, self.dx, self.dy
        )?;
        for j in 0..self.n_y {
            for i in 0..self.n_x {
                let k = j * self.n_x + i;
                writeln!(
                    out,
                    "{i} {j} {} {} {}",
                    self.u[k],
                    self.v[k],
                    u8::from(self.mask[k])
                )?;
            }
        }
        Ok(())
    }

    /// Cell index and fractional offset along one axis. Coordinates that land
    /// within rounding of a node snap to it so nodes reproduce exactly.
    fn locate(coord: f64, origin: f64, step: f64, n: usize) -> (usize, f64) {
        let mut f = (coord - origin) / step;
        let r = f.round();
        if (f - r).abs() < 1e-9 {
            f = r;
        }
        let i = (f.floor().max(0.0) as usize).min(n - 2);
        (i, f - i as f64)
    }
}

impl FlowField for GriddedField {
    fn domain(&self) -> Domain {
        self.domain
    }

    fn velocity_at(&self, p: Vec2) -> Result<Vec2, FlowError> {
        if !self.domain.contains(p) {
            return Err(FlowError::out_of_domain(p));
        }
        let (i, fx) = Self::locate(p.x, self.origin.x, self.dx, self.n_x);
        let (j, fy) = Self::locate(p.y, self.origin.y, self.dy, self.n_y);
        let k00 = j * self.n_x + i;
        let k10 = k00 + 1;
        let k01 = k00 + self.n_x;
        let k11 = k01 + 1;
        if [k00, k10, k01, k11].iter().any(|&k| self.mask[k]) {
            return Err(FlowError::Masked { x: p.x, y: p.y });
        }
        let w00 = (1.0 - fx) * (1.0 - fy);
        let w10 = fx * (1.0 - fy);
        let w01 = (1.0 - fx) * fy;
        let w11 = fx * fy;
        let bilinear = |a: &[f64]| w00 * a[k00] + w10 * a[k10] + w01 * a[k01] + w11 * a[k11];
        Ok(Vec2::new(bilinear(&self.u), bilinear(&self.v)))
    }

    /// Trapezoidal quadrature along `p -> (q.x, p.y) -> q` with sub-steps of at
    /// most half the grid spacing, split at grid lines.
    fn stream_value(&self, p: Vec2, q: Vec2) -> Result<f64, FlowError> {
        self.stream_value_with_order(p, q, PathOrder::XFirst)
    }

    fn default_hessian_step(&self) -> f64 {
        self.dx.min(self.dy)
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> FlowError {
    FlowError::Parse {
        line,
        msg: msg.into(),
    }
}

fn parse_tok<T: std::str::FromStr>(tok: &str, what: &str, line: usize) -> Result<T, FlowError> {
    tok.parse()
        .map_err(|_| parse_err(line, format!("cannot parse {what} from {tok:?}")))
}

/// Parses the line-oriented grid format:
///
/// ```text
/// FLOWGRID n_x n_y origin_x origin_y dx dy
/// i j u v mask      # n_x*n_y rows, j outer, mask in {0, 1}
/// ```
///
/// `#` starts a comment. Nothing is returned unless the whole file is valid.
pub fn load_grid<R: BufRead>(source: R) -> Result<GriddedField, FlowError> {
    let mut header: Option<(usize, usize, f64, f64, f64, f64)> = None;
    let mut rows: Vec<(usize, usize, usize, f64, f64, bool)> = Vec::new();

    for (idx, line) in source.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| FlowError::Io(e.to_string()))?;
        let content = line.split('#').next().unwrap_or("");
        let toks: Vec<&str> = content.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        if header.is_none() {
            if toks.len() != 7 || toks[0] != "FLOWGRID" {
                return Err(parse_err(
                    lineno,
                    "expected header `FLOWGRID n_x n_y origin_x origin_y dx dy`",
                ));
            }
            header = Some((
                parse_tok(toks[1], "n_x", lineno)?,
                parse_tok(toks[2], "n_y", lineno)?,
                parse_tok(toks[3], "origin_x", lineno)?,
                parse_tok(toks[4], "origin_y", lineno)?,
                parse_tok(toks[5], "dx", lineno)?,
                parse_tok(toks[6], "dy", lineno)?,
            ));
            continue;
        }
        if toks.len() != 5 {
            return Err(parse_err(
                lineno,
                format!("expected `i j u v mask`, found {} fields", toks.len()),
            ));
        }
        let mask = match toks[4] {
            "0" => false,
            "1" => true,
            other => {
                return Err(parse_err(
                    lineno,
                    format!("mask must be 0 or 1, got {other:?}"),
                ))
            }
        };
        let u: f64 = parse_tok(toks[2], "u", lineno)?;
        let v: f64 = parse_tok(toks[3], "v", lineno)?;
        if !u.is_finite() || !v.is_finite() {
            return Err(parse_err(lineno, "velocity components must be finite"));
        }
        rows.push((
            lineno,
            parse_tok(toks[0], "i", lineno)?,
            parse_tok(toks[1], "j", lineno)?,
            u,
            v,
            mask,
        ));
    }

    let (n_x, n_y, ox, oy, dx, dy) =
        header.ok_or_else(|| parse_err(1, "missing FLOWGRID header"))?;
    let expected = n_x
        .checked_mul(n_y)
        .ok_or_else(|| parse_err(1, "grid dimensions overflow"))?;
    if rows.len() != expected {
        return Err(FlowError::DimensionMismatch {
            expected,
            found: rows.len(),
        });
    }

    let mut u = vec![0.0; expected];
    let mut v = vec![0.0; expected];
    let mut mask = vec![false; expected];
    let mut seen = vec![false; expected];
    for (lineno, i, j, ui, vi, mi) in rows {
        if i >= n_x || j >= n_y {
            return Err(parse_err(
                lineno,
                format!("node ({i}, {j}) outside {n_x}x{n_y} grid"),
            ));
        }
        let k = j * n_x + i;
        if std::mem::replace(&mut seen[k], true) {
            return Err(parse_err(lineno, format!("duplicate node ({i}, {j})")));
        }
        u[k] = ui;
        v[k] = vi;
        mask[k] = mi;
    }
    GriddedField::new(Vec2::new(ox, oy), dx, dy, n_x, n_y, u, v, mask)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flowfield::AnalyticField;

    fn uniform_grid_text() -> String {
        "FLOWGRID 2 2 0 0 10 10\n0 0 0.1 0 0\n1 0 0.1 0 0\n0 1 0.1 0 0\n1 1 0.1 0 0\n".into()
    }

    #[test]
    fn loads_uniform_grid() {
        let g = load_grid(uniform_grid_text().as_bytes()).unwrap();
        for p in [
            Vec2::new(0.0, 0.0),
            Vec2::new(3.0, 7.0),
            Vec2::new(10.0, 10.0),
        ] {
            let f = g.velocity_at(p).unwrap();
            assert!((f.x - 0.1).abs() < 1e-15 && f.y == 0.0);
        }
        assert!(matches!(
            g.velocity_at(Vec2::new(10.5, 1.0)),
            Err(FlowError::OutOfDomain { .. })
        ));
    }

    #[test]
    fn bilinear_midpoint() {
        let text = "# left column 0, right column 1\nFLOWGRID 2 2 0 0 1 1\n0 0 0 0 0\n1 0 1 0 0\n0 1 0 0 0\n1 1 1 0 0\n";
        let g = load_grid(text.as_bytes()).unwrap();
        assert_eq!(
            g.velocity_at(Vec2::new(0.5, 0.5)).unwrap(),
            Vec2::new(0.5, 0.0)
        );
    }

    #[test]
    fn row_count_mismatch() {
        let text = "FLOWGRID 2 2 0 0 1 1\n0 0 0 0 0\n1 0 1 0 0\n0 1 0 0 0\n";
        assert_eq!(
            load_grid(text.as_bytes()).unwrap_err(),
            FlowError::DimensionMismatch {
                expected: 4,
                found: 3
            }
        );
    }

    #[test]
    fn masked_cell_rejects_queries() {
        let text = "FLOWGRID 2 2 0 0 1 1\n0 0 0 0 1\n1 0 1 0 0\n0 1 0 0 0\n1 1 1 0 0\n";
        let g = load_grid(text.as_bytes()).unwrap();
        assert!(matches!(
            g.velocity_at(Vec2::new(0.5, 0.5)),
            Err(FlowError::Masked { .. })
        ));
        assert!(!g.is_free(Vec2::new(0.9, 0.9)));
    }

    #[test]
    fn malformed_inputs() {
        let cases = [
            ("", "missing header"),
            ("GRID 2 2 0 0 1 1\n", "bad magic"),
            ("FLOWGRID 2 2 0 0 1\n", "short header"),
            (
                "FLOWGRID 2 2 0 0 1 1\n0 0 x 0 0\n1 0 0 0 0\n0 1 0 0 0\n1 1 0 0 0\n",
                "bad float",
            ),
            (
                "FLOWGRID 2 2 0 0 1 1\n0 0 0 0 2\n1 0 0 0 0\n0 1 0 0 0\n1 1 0 0 0\n",
                "bad mask",
            ),
            (
                "FLOWGRID 2 2 0 0 1 1\n0 0 0 0 0\n0 0 0 0 0\n0 1 0 0 0\n1 1 0 0 0\n",
                "duplicate",
            ),
            (
                "FLOWGRID 2 2 0 0 1 1\n0 0 0 0 0\n2 0 0 0 0\n0 1 0 0 0\n1 1 0 0 0\n",
                "out of range",
            ),
            ("FLOWGRID 2 2 0 0 1 1\n0 0 0 0\n", "short row"),
        ];
        for (text, why) in cases {
            let err = load_grid(text.as_bytes()).unwrap_err();
            assert!(matches!(err, FlowError::Parse { .. }), "{why}: {err:?}");
        }
        // Negative spacing parses but fails validation.
        let text = "FLOWGRID 2 2 0 0 -1 1\n0 0 0 0 0\n1 0 0 0 0\n0 1 0 0 0\n1 1 0 0 0\n";
        assert!(matches!(
            load_grid(text.as_bytes()).unwrap_err(),
            FlowError::InvalidParameter(_)
        ));
    }

    #[test]
    fn write_then_load_round_trips() {
        let src = AnalyticField::gyre_lattice(1.0, 100.0, 1, 1).unwrap();
        let g = GriddedField::sample_from(&src, Vec2::ZERO, 12.5, 10.0, 9, 11).unwrap();
        let mut buf = Vec::new();
        g.write_to(&mut buf).unwrap();
        assert_eq!(load_grid(buf.as_slice()).unwrap(), g);
    }

    #[test]
    fn nodes_reproduce_exactly() {
        let src = AnalyticField::gyre_lattice(1.0, 100.0, 1, 1).unwrap();
        let g = GriddedField::sample_from(&src, Vec2::new(0.1, 0.0), 0.3, 0.7, 20, 30).unwrap();
        let (nx, ny) = g.dims();
        for j in 0..ny {
            for i in 0..nx {
                let (node, masked) = g.node(i, j);
                let p = g.origin() + Vec2::new(i as f64 * 0.3, j as f64 * 0.7);
                if let Ok(f) = g.velocity_at(p) {
                    assert!(!masked);
                    assert_eq!(f, node, "node ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn gridded_stream_value_matches_closed_form() {
        let (v_peak, s) = (1.0, 1000.0);
        let src = AnalyticField::gyre_lattice(v_peak, s, 1, 1).unwrap();
        let g = GriddedField::sample_from(&src, Vec2::ZERO, 10.0, 10.0, 101, 101).unwrap();
        let exact = src
            .stream_value(Vec2::ZERO, Vec2::new(500.0, 500.0))
            .unwrap();
        let quad = g.stream_value(Vec2::ZERO, Vec2::new(500.0, 500.0)).unwrap();
        assert!((exact - 318.309_886).abs() < 1e-5);
        assert!(((quad - exact) / exact).abs() < 1e-3, "{quad} vs {exact}");
    }
}
