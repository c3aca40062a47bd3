//! Coordinates of a node in the three standard models of the hyperbolic
//! plane, one plane per embedding dimension.
//!
//! Dimension `i` of a point maps to the upper half-plane as
//! `(mu_i / c3, sigma_i)`. The Cayley transform takes the half-plane onto
//! the unit disc, and the inverse stereographic projection through
//! `(0, 0, -1)` lifts the disc onto the upper sheet of `z² - x² - y² = 1`.
//! All three maps are isometries, so `cosh` of the per-dimension hyperbolic
//! distance equals the Minkowski product of the hyperboloid images, and the
//! Fisher distance is `sqrt(lambda * sum_i arcosh²(<h_i(u), h_i(v)>))`.

use std::io::Write;

use super::{EmbeddingPoint, ManifoldConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperboloidPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl HyperboloidPoint {
    /// `z² - x² - y²`, equal to 1 on the hyperboloid.
    pub fn minkowski_norm(&self) -> f64 {
        self.z * self.z - self.x * self.x - self.y * self.y
    }
}

/// `z1 z2 - x1 x2 - y1 y2`; the cosh of the hyperbolic distance.
pub fn minkowski_product(a: &HyperboloidPoint, b: &HyperboloidPoint) -> f64 {
    a.z * b.z - a.x * b.x - a.y * b.y
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperbolicImage {
    pub half_plane: (f64, f64),
    pub disc: (f64, f64),
    pub hyperboloid: HyperboloidPoint,
}

fn cayley(x: f64, y: f64) -> (f64, f64) {
    let denom = x * x + (y + 1.0) * (y + 1.0);
    ((x * x + y * y - 1.0) / denom, -2.0 * x / denom)
}

fn inverse_stereographic(x: f64, y: f64) -> Result<HyperboloidPoint> {
    let r2 = x * x + y * y;
    if r2 >= 1.0 || r2.is_nan() {
        return Err(Error::NonFinite(format!(
            "disc point ({x}, {y}) lies outside the open unit disc"
        )));
    }
    let s = 1.0 - r2;
    Ok(HyperboloidPoint {
        x: 2.0 * x / s,
        y: 2.0 * y / s,
        z: (1.0 + r2) / s,
    })
}

pub fn to_hyperbolic_models(
    p: &EmbeddingPoint,
    cfg: &ManifoldConfig,
) -> Result<Vec<HyperbolicImage>> {
    (0..p.k())
        .map(|i| {
            let hp = (p.mu[i] / cfg.c3(), p.sigma[i]);
            let disc = cayley(hp.0, hp.1);
            let hyperboloid = inverse_stereographic(disc.0, disc.1)?;
            Ok(HyperbolicImage {
                half_plane: hp,
                disc,
                hyperboloid,
            })
        })
        .collect()
}

/// One row per (node, dimension): half-plane, disc and hyperboloid
/// coordinates.
pub fn write_hyperbolic_csv<W: Write>(
    mut w: W,
    points: &[EmbeddingPoint],
    cfg: &ManifoldConfig,
) -> Result<()> {
    writeln!(w, "node,dim,hp_x,hp_y,disc_x,disc_y,hyp_x,hyp_y,hyp_z")?;
    for (node, p) in points.iter().enumerate() {
        for (dim, img) in to_hyperbolic_models(p, cfg)?.iter().enumerate() {
            let h = img.hyperboloid;
            writeln!(
                w,
                "{node},{dim},{},{},{},{},{},{},{}",
                img.half_plane.0, img.half_plane.1, img.disc.0, img.disc.1, h.x, h.y, h.z
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::fisher_distance;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pt(mu: &[f64], sigma: &[f64]) -> EmbeddingPoint {
        EmbeddingPoint::new(mu.to_vec(), sigma.to_vec()).unwrap()
    }

    #[test]
    fn apex_point() {
        let cfg = ManifoldConfig::new(2, 1).unwrap();
        let img = to_hyperbolic_models(&pt(&[0.0], &[1.0]), &cfg).unwrap()[0];
        assert_eq!(img.half_plane, (0.0, 1.0));
        assert!(img.disc.0.abs() < 1e-15 && img.disc.1.abs() < 1e-15);
        let h = img.hyperboloid;
        assert!(h.x.abs() < 1e-15 && h.y.abs() < 1e-15 && (h.z - 1.0).abs() < 1e-15);
    }

    #[test]
    fn second_point_and_distance_identity() {
        let cfg = ManifoldConfig::new(2, 1).unwrap();
        let a = pt(&[0.0], &[1.0]);
        let b = pt(&[0.0], &[2.0]);
        let ib = to_hyperbolic_models(&b, &cfg).unwrap()[0];
        assert!((ib.disc.0 - 1.0 / 3.0).abs() < 1e-15 && ib.disc.1.abs() < 1e-15);
        let h = ib.hyperboloid;
        assert!((h.x - 0.75).abs() < 1e-15 && h.y.abs() < 1e-15 && (h.z - 1.25).abs() < 1e-15);

        let ia = to_hyperbolic_models(&a, &cfg).unwrap()[0];
        let cosh_d = minkowski_product(&ia.hyperboloid, &ib.hyperboloid);
        assert!((cosh_d - 1.25).abs() < 1e-15);
        let d = 2f64.sqrt() * cosh_d.acosh();
        assert!((d - fisher_distance(&a, &b, &cfg).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn images_lie_on_hyperboloid() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cfg = ManifoldConfig::new(4, 3).unwrap();
        for _ in 0..500 {
            let p = pt(
                &(0..3)
                    .map(|_| rng.random_range(-10.0..10.0))
                    .collect::<Vec<_>>(),
                &(0..3)
                    .map(|_| rng.random_range(0.05..10.0))
                    .collect::<Vec<_>>(),
            );
            for img in to_hyperbolic_models(&p, &cfg).unwrap() {
                let h = img.hyperboloid;
                assert!(h.z >= 1.0);
                assert!((h.minkowski_norm() - 1.0).abs() < 1e-9 * h.z * h.z);
                let (dx, dy) = img.disc;
                assert!(dx * dx + dy * dy < 1.0);
            }
        }
    }

    #[test]
    fn csv_layout() {
        let cfg = ManifoldConfig::new(2, 2).unwrap();
        let mut buf = Vec::new();
        write_hyperbolic_csv(&mut buf, &[pt(&[0.0, 1.0], &[1.0, 2.0])], &cfg).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(
            lines[0],
            "node,dim,hp_x,hp_y,disc_x,disc_y,hyp_x,hyp_y,hyp_z"
        );
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("0,0,0,1,"));
    }
}
