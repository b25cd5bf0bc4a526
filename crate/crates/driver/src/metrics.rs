//! Error norms and convergence-rate fits.

use stefanst_core::fem::element_points;
use stefanst_core::mesh::Mesh;

/// L2 norms of `T_h - T̂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L2Error {
    /// `‖T_h - T̂‖`.
    pub absolute: f64,
    /// `‖T_h - T̂‖ / √|Ω|`, the RMS error in field units.
    pub normalized: f64,
    /// `‖T_h - T̂‖ / ‖T̂‖`.
    pub relative: f64,
}

/// Element quadrature of the error between nodal field `numerical` and the
/// pointwise `exact`.
pub fn l2_error(mesh: &Mesh<f64>, numerical: &[f64], exact: impl Fn([f64; 2]) -> f64) -> L2Error {
    let (mut err, mut reference, mut area) = (0.0, 0.0, 0.0);
    for e in 0..mesh.element_count() {
        let nodes = mesh.element(e);
        for ep in element_points(mesh, e) {
            let (mut x, mut th) = ([0.0, 0.0], 0.0);
            for (k, &i) in nodes.iter().enumerate() {
                let p = mesh.node(i);
                x[0] += ep.n[k] * p[0];
                x[1] += ep.n[k] * p[1];
                th += ep.n[k] * numerical[i];
            }
            let te = exact(x);
            err += (th - te).powi(2) * ep.wdet;
            reference += te * te * ep.wdet;
            area += ep.wdet;
        }
    }
    let absolute = err.sqrt();
    L2Error {
        absolute,
        normalized: absolute / area.sqrt(),
        relative: if reference > 0.0 {
            absolute / reference.sqrt()
        } else {
            f64::NAN
        },
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len().min(y.len()) as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Convergence rate with respect to the mesh size: minus the slope of
/// `log(relative error)` against `log(√nodes)`.
pub fn convergence_rate(nodes: &[usize], relative: &[f64]) -> f64 {
    let per_direction: Vec<f64> = nodes.iter().map(|&n| (n as f64).sqrt()).collect();
    let slope = log_log_slope(&per_direction, relative);
    if slope == 0.0 {
        0.0
    } else {
        -slope
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use stefanst_core::mesh::StructuredSpec;

    #[test]
    fn identical_and_offset_fields() {
        let m = StructuredSpec::new(4, 4, 1.0, 1.0).build::<f64>().unwrap();
        let t: Vec<f64> = m.coords().iter().map(|p| 2.0 + p[0]).collect();
        let e = l2_error(&m, &t, |x| 2.0 + x[0]);
        assert!(e.absolute < 1e-14 && e.relative < 1e-14);
        let e = l2_error(&m, &t, |x| 2.0 + x[0] - 0.25);
        assert_relative_eq!(e.absolute, 0.25, max_relative = 1e-12);
        let wide = StructuredSpec::new(4, 2, 4.0, 1.0).build::<f64>().unwrap();
        let z = vec![0.5; wide.node_count()];
        let e = l2_error(&wide, &z, |_| 0.0);
        assert_relative_eq!(e.absolute, 1.0, max_relative = 1e-12);
        assert_relative_eq!(e.normalized, 0.5, max_relative = 1e-12);
    }

    #[test]
    fn rate_fits() {
        let nodes = [121, 441, 1681, 6561];
        assert_eq!(convergence_rate(&nodes, &[0.01; 4]), 0.0);
        // error halves when the per-direction count doubles: first order
        let rel: Vec<f64> = nodes
            .iter()
            .map(|&n| 1.0 / ((n as f64).sqrt() - 0.0))
            .collect();
        assert_relative_eq!(convergence_rate(&nodes, &rel), 1.0, max_relative = 1e-12);
        let quad: Vec<f64> = nodes.iter().map(|&n| 3.0 / n as f64).collect();
        assert_relative_eq!(convergence_rate(&nodes, &quad), 2.0, max_relative = 1e-12);
    }
}
