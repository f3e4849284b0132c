//! Multi-particle lattice geometry.
//!
//! Configurations are points of `(Z^d)^n ~ Z^{nd}` stored flat
//! (particle-major, axis-minor). Rectangles are products of one-particle
//! cubes; all site enumeration is row-major over the flat coordinates so the
//! index map shared with the operator assembly is a bijection
//! `configs <-> 0..dim-1`.
//!
//! Particle index subsets appearing in public verdicts are 1-based, matching
//! the set language `{1..n}`; internal computation is 0-based.

mod interactivity;
mod ladder;
mod probe;
mod separability;

pub use interactivity::{
    classify_interactivity, count_singular, fi_projection_disjointness, FiDisjointness,
    Interactivity, InteractivityVerdict, SingularCounts,
};
pub use ladder::{isqrt_u128, ScaleLadder};
pub use probe::{annulus, edge_probe, AnnulusSpec, EdgeProbe};
pub use separability::{
    candidate_centers, is_separable, kappa, separable_by_spread, verify_candidate_cover,
    CoverCheck, SeparabilityVerdict,
};

use crate::error::{LabError, Result};
use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// A configuration of `n` distinguishable particles on `Z^d`.
///
/// Coordinates are stored flat: `coords[i*d + a]` is axis `a` of particle `i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Config {
    n: usize,
    d: usize,
    coords: Vec<i64>,
}

impl Config {
    pub fn new(n: usize, d: usize, coords: Vec<i64>) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(LabError::InvalidArgument("n and d must be >= 1".into()));
        }
        if coords.len() != n * d {
            return Err(LabError::Shape(format!(
                "expected {} coordinates for n={n}, d={d}, got {}",
                n * d,
                coords.len()
            )));
        }
        Ok(Config { n, d, coords })
    }

    /// Build from one point per particle.
    pub fn from_points(points: &[Vec<i64>]) -> Result<Self> {
        if points.is_empty() {
            return Err(LabError::InvalidArgument("no particles".into()));
        }
        let d = points[0].len();
        if points.iter().any(|p| p.len() != d) {
            return Err(LabError::Shape("particles have differing dimensions".into()));
        }
        let coords = points.concat();
        Config::new(points.len(), d, coords)
    }

    /// 1-d shortcut: one coordinate per particle.
    pub fn line(coords: &[i64]) -> Self {
        Config {
            n: coords.len(),
            d: 1,
            coords: coords.to_vec(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn flat(&self) -> &[i64] {
        &self.coords
    }

    pub fn particle(&self, i: usize) -> &[i64] {
        &self.coords[i * self.d..(i + 1) * self.d]
    }

    pub fn points(&self) -> Vec<Vec<i64>> {
        (0..self.n).map(|i| self.particle(i).to_vec()).collect()
    }

    fn same_shape(&self, other: &Config) -> Result<()> {
        if self.n != other.n || self.d != other.d {
            return Err(LabError::Shape(format!(
                "configs have shapes ({}, {}) and ({}, {})",
                self.n, self.d, other.n, other.d
            )));
        }
        Ok(())
    }

    /// diam(Pi u) = max_{i != j} |u_i - u_j| in the max-norm; 0 for n = 1.
    pub fn cloud_diameter(&self) -> i64 {
        let mut diam = 0;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                diam = diam.max(point_max_norm(self.particle(i), self.particle(j)));
            }
        }
        diam
    }
}

impl Serialize for Config {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = ser.serialize_struct("Config", 3)?;
        s.serialize_field("coords", &self.points())?;
        s.serialize_field("n", &self.n)?;
        s.serialize_field("d", &self.d)?;
        s.end()
    }
}

impl<'de> Deserialize<'de> for Config {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            coords: Vec<Vec<i64>>,
            n: usize,
            d: usize,
        }
        let raw = Raw::deserialize(de)?;
        let cfg = Config::from_points(&raw.coords).map_err(serde::de::Error::custom)?;
        if cfg.n != raw.n || cfg.d != raw.d {
            return Err(serde::de::Error::custom("inconsistent n/d"));
        }
        Ok(cfg)
    }
}

#[inline]
pub(crate) fn point_max_norm(a: &[i64], b: &[i64]) -> i64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .max()
        .unwrap_or(0)
}

/// Max-norm distance between two configurations.
pub fn max_norm(x: &Config, y: &Config) -> Result<i64> {
    x.same_shape(y)?;
    Ok(point_max_norm(x.flat(), y.flat()))
}

/// l1 distance between two configurations; value 1 identifies the
/// nearest-neighbour pairs coupled by the Laplacian.
pub fn l1_norm(x: &Config, y: &Config) -> Result<i64> {
    x.same_shape(y)?;
    Ok(x.flat().iter().zip(y.flat()).map(|(a, b)| (a - b).abs()).sum())
}

/// An n-particle lattice rectangle: the product of one-particle cubes
/// `C_{L_i}(u_i)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Rectangle {
    pub center: Config,
    pub radii: Vec<i64>,
}

impl Rectangle {
    pub fn new(center: Config, radii: Vec<i64>) -> Result<Self> {
        if radii.len() != center.n() {
            return Err(LabError::Shape(format!(
                "{} radii for {} particles",
                radii.len(),
                center.n()
            )));
        }
        if radii.iter().any(|&r| r < 0) {
            return Err(LabError::InvalidArgument("negative radius".into()));
        }
        Ok(Rectangle { center, radii })
    }

    /// Equal-radius cube `C_L(u)`.
    pub fn cube(center: Config, l: i64) -> Result<Self> {
        let radii = vec![l; center.n()];
        Rectangle::new(center, radii)
    }

    pub fn n(&self) -> usize {
        self.center.n()
    }

    pub fn d(&self) -> usize {
        self.center.d()
    }

    pub fn radius_min(&self) -> i64 {
        *self.radii.iter().min().expect("nonempty radii")
    }

    pub fn radius_max(&self) -> i64 {
        *self.radii.iter().max().expect("nonempty radii")
    }

    /// Radius if all radii are equal (a cube), else None.
    pub fn equal_radius(&self) -> Option<i64> {
        let r = self.radii[0];
        self.radii.iter().all(|&x| x == r).then_some(r)
    }

    /// Number of sites: prod_i (2 L_i + 1)^d.
    pub fn cardinality(&self) -> u128 {
        self.radii
            .iter()
            .map(|&l| (2 * l as u128 + 1).pow(self.d() as u32))
            .product()
    }

    pub fn contains_flat(&self, flat: &[i64]) -> bool {
        debug_assert_eq!(flat.len(), self.n() * self.d());
        let d = self.d();
        flat.iter().enumerate().all(|(idx, &c)| {
            let i = idx / d;
            (c - self.center.flat()[idx]).abs() <= self.radii[i]
        })
    }

    pub fn contains(&self, x: &Config) -> bool {
        x.n() == self.n() && x.d() == self.d() && self.contains_flat(x.flat())
    }

    /// Row-major index bijection over the sites.
    pub fn index_map(&self) -> IndexMap {
        let d = self.d();
        let lo: Vec<i64> = self
            .center
            .flat()
            .iter()
            .enumerate()
            .map(|(idx, &c)| c - self.radii[idx / d])
            .collect();
        let extents: Vec<usize> = (0..self.n() * d)
            .map(|idx| (2 * self.radii[idx / d] + 1) as usize)
            .collect();
        IndexMap::new(lo, extents)
    }

    /// All sites, row-major. Intended for small rectangles and oracles.
    pub fn sites(&self) -> Vec<Vec<i64>> {
        let map = self.index_map();
        let mut out = Vec::with_capacity(map.dim());
        let mut buf = vec![0i64; self.n() * self.d()];
        for idx in 0..map.dim() {
            map.config_at(idx, &mut buf);
            out.push(buf.clone());
        }
        out
    }

    /// Axis-aligned box of particle `i` as (lo, hi) inclusive.
    pub fn particle_box(&self, i: usize) -> (Vec<i64>, Vec<i64>) {
        let c = self.center.particle(i);
        let l = self.radii[i];
        (c.iter().map(|&x| x - l).collect(), c.iter().map(|&x| x + l).collect())
    }
}

/// Mixed-radix row-major bijection between rectangle sites and `0..dim-1`.
#[derive(Clone, Debug)]
pub struct IndexMap {
    lo: Vec<i64>,
    extents: Vec<usize>,
    strides: Vec<usize>,
    dim: usize,
}

impl IndexMap {
    fn new(lo: Vec<i64>, extents: Vec<usize>) -> Self {
        let k = extents.len();
        let mut strides = vec![1usize; k];
        for axis in (0..k.saturating_sub(1)).rev() {
            strides[axis] = strides[axis + 1] * extents[axis + 1];
        }
        let dim = extents.iter().product();
        IndexMap { lo, extents, strides, dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn axes(&self) -> usize {
        self.extents.len()
    }

    pub fn extents(&self) -> &[usize] {
        &self.extents
    }

    #[inline]
    pub fn index_of(&self, flat: &[i64]) -> Option<usize> {
        let mut idx = 0usize;
        for a in 0..self.extents.len() {
            let off = flat[a] - self.lo[a];
            if off < 0 || off as usize >= self.extents[a] {
                return None;
            }
            idx += off as usize * self.strides[a];
        }
        Some(idx)
    }

    #[inline]
    pub fn config_at(&self, mut idx: usize, buf: &mut [i64]) {
        for a in 0..self.extents.len() {
            buf[a] = self.lo[a] + (idx / self.strides[a]) as i64;
            idx %= self.strides[a];
        }
    }

    /// Indices of sites with at least one axis offset at 0 or extent-1,
    /// i.e. sites of the rectangle at l1 distance 1 from its complement.
    pub fn inner_boundary_indices(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut buf = vec![0usize; self.extents.len()];
        'outer: for idx in 0..self.dim {
            let mut rem = idx;
            for a in 0..self.extents.len() {
                buf[a] = rem / self.strides[a];
                rem %= self.strides[a];
            }
            for a in 0..self.extents.len() {
                if buf[a] == 0 || buf[a] + 1 == self.extents[a] {
                    out.push(idx);
                    continue 'outer;
                }
            }
        }
        out
    }
}

/// Boundary of a rectangle per the three lattice conventions: straddling
/// l1-adjacent pairs, the internal boundary, and the external boundary.
#[derive(Clone, Debug, Serialize)]
pub struct BoundarySets {
    pub pairs: Vec<(Vec<i64>, Vec<i64>)>,
    pub inner: Vec<Vec<i64>>,
    pub outer: Vec<Vec<i64>>,
}

/// Enumerate the boundary of `r`. Pairs are ordered (inside, outside).
pub fn boundaries(r: &Rectangle) -> BoundarySets {
    let map = r.index_map();
    let axes = map.axes();
    let mut pairs = Vec::new();
    let mut inner = BTreeSet::new();
    let mut outer = BTreeSet::new();
    let mut buf = vec![0i64; axes];
    for idx in 0..map.dim() {
        map.config_at(idx, &mut buf);
        for a in 0..axes {
            for step in [-1i64, 1] {
                buf[a] += step;
                if map.index_of(&buf).is_none() {
                    let outside = buf.clone();
                    buf[a] -= step;
                    pairs.push((buf.clone(), outside.clone()));
                    inner.insert(buf.clone());
                    outer.insert(outside);
                } else {
                    buf[a] -= step;
                }
            }
        }
    }
    BoundarySets {
        pairs,
        inner: inner.into_iter().collect(),
        outer: outer.into_iter().collect(),
    }
}

/// J-projection of a rectangle: the union of the listed one-particle cubes,
/// as an explicit site set in Z^d. `j` holds 0-based particle indices.
pub fn projection(r: &Rectangle, j: &[usize]) -> Result<BTreeSet<Vec<i64>>> {
    if j.is_empty() {
        return Err(LabError::InvalidArgument("empty projection subset".into()));
    }
    if j.iter().any(|&i| i >= r.n()) {
        return Err(LabError::InvalidArgument("projection index out of range".into()));
    }
    let d = r.d();
    let mut out = BTreeSet::new();
    for &i in j {
        let (lo, hi) = r.particle_box(i);
        let extents: Vec<usize> = (0..d).map(|a| (hi[a] - lo[a] + 1) as usize).collect();
        let count: usize = extents.iter().product();
        let mut site = vec![0i64; d];
        for mut idx in 0..count {
            for a in (0..d).rev() {
                site[a] = lo[a] + (idx % extents[a]) as i64;
                idx /= extents[a];
            }
            out.insert(site.clone());
        }
    }
    Ok(out)
}

/// Full projection Pi C = union over all particles.
pub fn full_projection(r: &Rectangle) -> BTreeSet<Vec<i64>> {
    let all: Vec<usize> = (0..r.n()).collect();
    projection(r, &all).expect("full subset is nonempty and in range")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn max_norm_examples() {
        let x = Config::line(&[0, 0]);
        let y = Config::line(&[0, 0]);
        assert_eq!(max_norm(&x, &y).unwrap(), 0);
        let x = Config::line(&[0, 3]);
        let y = Config::line(&[10, 10]);
        assert_eq!(max_norm(&x, &y).unwrap(), 10);
    }

    #[test]
    fn norms_reject_shape_mismatch() {
        let x = Config::line(&[0, 0]);
        let y = Config::line(&[0, 0, 0]);
        assert!(max_norm(&x, &y).is_err());
        assert!(l1_norm(&x, &y).is_err());
    }

    #[test]
    fn l1_examples() {
        let x = Config::line(&[0, 0]);
        assert_eq!(l1_norm(&x, &x).unwrap(), 0);
        let y = Config::line(&[1, 0]);
        assert_eq!(l1_norm(&x, &y).unwrap(), 1);
    }

    #[test]
    fn cardinality_matches_enumeration() {
        for (n, d, l) in [(1, 1, 2i64), (2, 1, 1), (1, 2, 1), (2, 2, 1), (3, 1, 1)] {
            let center = Config::new(n, d, vec![0; n * d]).unwrap();
            let r = Rectangle::cube(center, l).unwrap();
            assert_eq!(r.cardinality(), r.sites().len() as u128, "n={n} d={d} l={l}");
        }
        // mixed radii
        let r = Rectangle::new(Config::line(&[0, 10]), vec![1, 2]).unwrap();
        assert_eq!(r.cardinality(), 3 * 5);
        assert_eq!(r.sites().len(), 15);
    }

    #[test]
    fn index_map_round_trip() {
        let r = Rectangle::new(Config::from_points(&[vec![0, 3], vec![-2, 1]]).unwrap(), vec![1, 2])
            .unwrap();
        let map = r.index_map();
        let mut buf = vec![0i64; 4];
        for idx in 0..map.dim() {
            map.config_at(idx, &mut buf);
            assert_eq!(map.index_of(&buf), Some(idx));
            assert!(r.contains_flat(&buf));
        }
        assert_eq!(map.dim() as u128, r.cardinality());
    }

    #[test]
    fn boundary_1d_radius_one() {
        let r = Rectangle::cube(Config::line(&[0]), 1).unwrap();
        let b = boundaries(&r);
        assert_eq!(b.inner, vec![vec![-1], vec![1]]);
        assert_eq!(b.outer, vec![vec![-2], vec![2]]);
        assert_eq!(b.pairs.len(), 2);
    }

    #[test]
    fn boundary_single_site() {
        let r = Rectangle::cube(Config::line(&[0]), 0).unwrap();
        let b = boundaries(&r);
        assert_eq!(b.inner, vec![vec![0]]);
        assert_eq!(b.outer, vec![vec![-1], vec![1]]);
    }

    #[test]
    fn inner_boundary_count_two_particles() {
        // |inner boundary of C^{(2)}_L in d=1| = (2L+1)^2 - (2L-1)^2
        for l in 1..=3i64 {
            let r = Rectangle::cube(Config::line(&[0, 0]), l).unwrap();
            let b = boundaries(&r);
            let expect = (2 * l + 1).pow(2) - (2 * l - 1).pow(2);
            assert_eq!(b.inner.len() as i64, expect, "L={l}");
            assert_eq!(r.index_map().inner_boundary_indices().len() as i64, expect);
        }
    }

    #[test]
    fn inner_boundary_indices_agree_with_enumeration() {
        let r = Rectangle::new(Config::from_points(&[vec![0, 0], vec![5, 5]]).unwrap(), vec![1, 2])
            .unwrap();
        let map = r.index_map();
        let by_index: BTreeSet<Vec<i64>> = map
            .inner_boundary_indices()
            .into_iter()
            .map(|i| {
                let mut buf = vec![0i64; map.axes()];
                map.config_at(i, &mut buf);
                buf
            })
            .collect();
        let by_enum: BTreeSet<Vec<i64>> = boundaries(&r).inner.into_iter().collect();
        assert_eq!(by_index, by_enum);
    }

    #[test]
    fn projection_merges_and_counts() {
        // full J on cube centers (0, 10), L=1, d=1
        let r = Rectangle::cube(Config::line(&[0, 10]), 1).unwrap();
        let p = projection(&r, &[0, 1]).unwrap();
        let expect: BTreeSet<Vec<i64>> =
            [-1, 0, 1, 9, 10, 11].iter().map(|&x| vec![x]).collect();
        assert_eq!(p, expect);

        // overlapping coordinates merge
        let r = Rectangle::cube(Config::line(&[0, 1]), 1).unwrap();
        let p = projection(&r, &[0, 1]).unwrap();
        assert_eq!(p.len(), 4); // {-1, 0, 1, 2}

        // |Pi_J| <= sum (2L_j+1)^d with equality iff disjoint
        let r = Rectangle::cube(Config::line(&[0, 100]), 1).unwrap();
        assert_eq!(projection(&r, &[0, 1]).unwrap().len(), 6);
        assert!(projection(&r, &[]).is_err());
    }

    #[test]
    fn config_serde_round_trip() {
        let c = Config::from_points(&[vec![0, 3], vec![-2, 1]]).unwrap();
        let json = serde_json::to_string(&c).unwrap();
        assert!(json.contains("\"coords\":[[0,3],[-2,1]]"), "{json}");
        let back: Config = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c);
    }
}
