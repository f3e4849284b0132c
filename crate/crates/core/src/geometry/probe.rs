//! Spectral-edge probe wells and the annulus machinery for decay scans.

use super::separability::candidate_centers;
use super::{point_max_norm, Config, ScaleLadder};
use crate::error::{LabError, Result};
use serde::Serialize;

/// A family of well centers spaced so their one-particle projections are
/// pairwise disjoint and interaction-free.
#[derive(Clone, Debug, Serialize)]
pub struct EdgeProbe {
    pub k: i64,
    pub m_well: i64,
    pub c_km: i64,
    pub centers: Vec<Config>,
    pub n: usize,
    pub d: usize,
    pub r0: i64,
}

impl EdgeProbe {
    /// Radius of the wells: the quasi-mode support cube `C_{km}`.
    pub fn well_radius(&self) -> i64 {
        self.k * self.m_well
    }
}

/// Build the probe centers `x^{l} = C_km * (C_km*l + 1, ..., C_km*l + nd)`
/// for `l = 1..=num_centers`, with `C_km = r_0 + 2km + Nd + 1`.
///
/// Checks that every center keeps inter-particle distances above
/// `r_0 + 2km` (so the interaction vanishes on the well cube) and that the
/// projections of distinct wells are pairwise disjoint.
pub fn edge_probe(
    big_n: usize,
    d: usize,
    r0: i64,
    k: i64,
    m_well: i64,
    num_centers: usize,
) -> Result<EdgeProbe> {
    if big_n == 0 || d == 0 || k <= 0 || m_well <= 0 || num_centers == 0 {
        return Err(LabError::InvalidArgument("edge_probe arguments must be positive".into()));
    }
    let n = big_n;
    let nd = n * d;
    let c_km = r0 + 2 * k * m_well + (big_n * d) as i64 + 1;
    let mut centers = Vec::with_capacity(num_centers);
    for ell in 1..=num_centers as i64 {
        let coords: Vec<i64> = (1..=nd as i64).map(|a| c_km * (c_km * ell + a)).collect();
        centers.push(Config::new(n, d, coords)?);
    }
    let well = k * m_well;
    for c in &centers {
        let min_gap = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .map(|(i, j)| point_max_norm(c.particle(i), c.particle(j)))
            .min();
        if let Some(gap) = min_gap {
            if gap <= r0 + 2 * k * m_well {
                return Err(LabError::Other(format!(
                    "probe center violates the interaction-free spacing: gap {gap}"
                )));
            }
        }
    }
    for (a, ca) in centers.iter().enumerate() {
        for cb in centers.iter().skip(a + 1) {
            let disjoint = (0..n).all(|i| {
                (0..n).all(|j| point_max_norm(ca.particle(i), cb.particle(j)) > 2 * well)
            });
            if !disjoint {
                return Err(LabError::Other("probe projections overlap".into()));
            }
        }
    }
    Ok(EdgeProbe {
        k,
        m_well,
        c_km,
        centers,
        n,
        d,
        r0,
    })
}

/// Annulus around `u` between consecutive ladder scales, with the candidate
/// cube exclusion baked into the inner radius.
#[derive(Clone, Debug, Serialize)]
pub struct AnnulusSpec {
    pub u: Config,
    pub k: usize,
    pub r_u: i64,
    pub b_k: f64,
    pub b: f64,
    pub big_n: usize,
    /// 7N L_k + R(u), an exact integer.
    pub inner_radius: i64,
    /// b * (7N L_{k+1} + R(u)).
    pub outer_radius: f64,
}

impl AnnulusSpec {
    /// Membership: inner cube excluded as a closed set, outer cube included:
    /// `b_k L_k < |x - u| <= b b_{k+1} L_{k+1}`.
    pub fn contains(&self, x: &Config) -> bool {
        let dist = point_max_norm(x.flat(), self.u.flat());
        dist > self.inner_radius && (dist as f64) <= self.outer_radius
    }
}

/// Build the annulus spec at ladder level `k`. `b > 1` is a free scaling
/// parameter. The union of radius-`7N L_k` cubes at the candidate centers of
/// `u` is contained in the inner cube; the constructor re-checks this.
pub fn annulus(u: &Config, ladder: &ScaleLadder, k: usize, b: f64, big_n: usize) -> Result<AnnulusSpec> {
    if b <= 1.0 {
        return Err(LabError::InvalidArgument(format!("annulus scaling b must exceed 1, got {b}")));
    }
    if k + 1 >= ladder.len() {
        return Err(LabError::InvalidArgument(format!(
            "annulus needs levels k={k} and k+1, ladder has {}",
            ladder.len()
        )));
    }
    let l_k = ladder.level(k);
    let l_k1 = ladder.level(k + 1);
    let centers = candidate_centers(u);
    let r_u = centers
        .iter()
        .map(|c| point_max_norm(c.flat(), u.flat()))
        .max()
        .unwrap_or(0);
    let seven_n = 7 * big_n as i64;
    let inner_radius = seven_n * l_k + r_u;
    // candidate cubes C_{7N L_k}(u^l) all sit inside the inner cube
    for c in &centers {
        let reach = point_max_norm(c.flat(), u.flat()) + seven_n * l_k;
        if reach > inner_radius {
            return Err(LabError::Other("candidate cube escapes the inner cube".into()));
        }
    }
    let b_k = 7.0 * big_n as f64 + r_u as f64 / l_k as f64;
    let outer_radius = b * (seven_n * l_k1 + r_u) as f64;
    Ok(AnnulusSpec {
        u: u.clone(),
        k,
        r_u,
        b_k,
        b,
        big_n,
        inner_radius,
        outer_radius,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::separability::cubes_separable_flat;

    #[test]
    fn probe_formula_example() {
        let p = edge_probe(2, 1, 1, 1, 2, 3).unwrap();
        assert_eq!(p.c_km, 8);
        assert_eq!(p.centers[0].flat(), &[72, 80]);
        assert_eq!(p.well_radius(), 2);
    }

    #[test]
    fn probe_single_particle_spacing() {
        let p = edge_probe(1, 1, 0, 2, 3, 4).unwrap();
        // centers are single integers spaced C_km^2
        let c = p.c_km;
        for w in p.centers.windows(2) {
            assert_eq!(w[1].flat()[0] - w[0].flat()[0], c * c);
        }
    }

    #[test]
    fn annulus_single_particle() {
        let ladder = ScaleLadder::new(4, 2).unwrap();
        let u = Config::line(&[0]);
        let a = annulus(&u, &ladder, 0, 2.0, 1).unwrap();
        assert_eq!(a.r_u, 0);
        assert_eq!(a.b_k, 7.0);
        assert_eq!(a.inner_radius, 7 * 4);
        // boundary convention
        let at_inner = Config::line(&[a.inner_radius]);
        assert!(!a.contains(&at_inner));
        let at_outer = Config::line(&[a.outer_radius as i64]);
        assert!(a.contains(&at_outer));
    }

    #[test]
    fn annulus_members_separable_from_center() {
        let ladder = ScaleLadder::new_relaxed(2, 2).unwrap();
        let u = Config::line(&[0, 3]);
        let big_n = 2;
        let a = annulus(&u, &ladder, 0, 1.5, big_n).unwrap();
        let l_k = ladder.level(0);
        let lim = a.outer_radius as i64 + 1;
        let mut checked = 0u64;
        for p in -lim..=lim {
            for q in -lim..=lim {
                let y = Config::line(&[p, q]);
                if a.contains(&y) {
                    // points excluded from the candidate cubes must be separable
                    let covered = candidate_centers(&u)
                        .iter()
                        .any(|c| point_max_norm(y.flat(), c.flat()) <= 2 * 2 * l_k);
                    if !covered {
                        checked += 1;
                        assert!(
                            cubes_separable_flat(u.flat(), y.flat(), 2, 1, l_k, big_n),
                            "annulus member {y:?} not separable from center"
                        );
                    }
                }
            }
        }
        assert!(checked > 100, "only {checked} members checked");
    }
}
