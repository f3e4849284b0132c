//! Separability of rectangle pairs and the candidate-center covering family.

use super::{point_max_norm, Config, Rectangle};
use crate::error::{LabError, Result};
use serde::Serialize;

/// kappa(n) = n^n, the size of the candidate-center family.
pub fn kappa(n: usize) -> u64 {
    (n as u64).pow(n as u32)
}

/// Outcome of a separability test between two rectangles.
///
/// `witness_subset` holds 1-based particle indices; it witnesses
/// pre-separability of the first rectangle from the second when
/// `witness_on_first`, otherwise of the second from the first.
#[derive(Clone, Debug, Serialize)]
pub struct SeparabilityVerdict {
    pub separable: bool,
    pub witness_subset: Option<Vec<usize>>,
    pub distance: i64,
    #[serde(skip)]
    pub witness_on_first: bool,
}

/// Two radius-`l` boxes in Z^d around centers `a`, `b` intersect iff every
/// axis gap is at most `la + lb`.
#[inline]
fn boxes_intersect(a: &[i64], la: i64, b: &[i64], lb: i64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= la + lb)
}

/// Search nonempty subsets J of the particles of `a` (lexicographically by
/// sorted index list) such that the J-boxes of `a` are disjoint from the
/// remaining boxes of `a` and from every box of `b`.
fn pre_separable_witness(a: &Rectangle, b: &Rectangle) -> Option<Vec<usize>> {
    let n = a.n();
    let d = a.d();
    // disjoint_within[j]: bitmask of a-particles whose box is disjoint from a_j
    // disjoint_from_b[j]: a_j's box avoids every box of b
    let mut disjoint_within = vec![0u32; n];
    let mut disjoint_from_b = vec![true; n];
    for j in 0..n {
        let cj = &a.center.flat()[j * d..(j + 1) * d];
        for j2 in 0..n {
            if j2 != j {
                let c2 = &a.center.flat()[j2 * d..(j2 + 1) * d];
                if !boxes_intersect(cj, a.radii[j], c2, a.radii[j2]) {
                    disjoint_within[j] |= 1 << j2;
                }
            }
        }
        for i in 0..b.n() {
            let ci = &b.center.flat()[i * d..(i + 1) * d];
            if boxes_intersect(cj, a.radii[j], ci, b.radii[i]) {
                disjoint_from_b[j] = false;
                break;
            }
        }
    }
    let full = (1u32 << n) - 1;
    let mut best: Option<Vec<usize>> = None;
    for mask in 1..=full {
        let mut ok = true;
        for j in 0..n {
            if mask & (1 << j) != 0 {
                let others = full & !mask;
                if !disjoint_from_b[j] || (disjoint_within[j] & others) != others {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            let subset: Vec<usize> = (0..n).filter(|&j| mask & (1 << j) != 0).map(|j| j + 1).collect();
            match &best {
                Some(cur) if *cur <= subset => {}
                _ => best = Some(subset),
            }
        }
    }
    best
}

/// Separability test per the three-step definition: a pre-separability
/// witness on either side plus center distance greater than `7 N L`, where
/// `L` is the maximum of all radii of both rectangles.
pub fn is_separable(a: &Rectangle, b: &Rectangle, big_n: usize) -> Result<SeparabilityVerdict> {
    if a.n() != b.n() || a.d() != b.d() {
        return Err(LabError::Shape("rectangles have different particle shapes".into()));
    }
    if a.n() > 16 {
        return Err(LabError::InvalidArgument("subset search limited to n <= 16".into()));
    }
    let distance = point_max_norm(a.center.flat(), b.center.flat());
    let l = a.radius_max().max(b.radius_max());
    let threshold = 7 * big_n as i64 * l;

    let (witness, on_first) = match pre_separable_witness(a, b) {
        Some(w) => (Some(w), true),
        None => (pre_separable_witness(b, a), false),
    };
    let separable = witness.is_some() && distance > threshold;
    Ok(SeparabilityVerdict {
        separable,
        witness_subset: witness,
        distance,
        witness_on_first: on_first,
    })
}

/// Lean same-shape equal-radius variant used by exhaustive sweeps.
pub(crate) fn cubes_separable_flat(
    x: &[i64],
    y: &[i64],
    n: usize,
    d: usize,
    l: i64,
    big_n: usize,
) -> bool {
    if point_max_norm(x, y) <= 7 * big_n as i64 * l {
        return false;
    }
    pre_separable_flat(x, y, n, d, l) || pre_separable_flat(y, x, n, d, l)
}

fn pre_separable_flat(x: &[i64], y: &[i64], n: usize, d: usize, l: i64) -> bool {
    let mut disjoint_within = [0u32; 16];
    let mut disjoint_from_y = [false; 16];
    for j in 0..n {
        let cj = &x[j * d..(j + 1) * d];
        for j2 in 0..n {
            if j2 != j && !boxes_intersect(cj, l, &x[j2 * d..(j2 + 1) * d], l) {
                disjoint_within[j] |= 1 << j2;
            }
        }
        disjoint_from_y[j] = (0..n).all(|i| !boxes_intersect(cj, l, &y[i * d..(i + 1) * d], l));
    }
    let full = (1u32 << n) - 1;
    'mask: for mask in 1..=full {
        for j in 0..n {
            if mask & (1 << j) != 0 {
                let others = full & !mask;
                if !disjoint_from_y[j] || (disjoint_within[j] & others) != others {
                    continue 'mask;
                }
            }
        }
        return true;
    }
    false
}

/// The n^n coordinate resamplings of `x`: one center per map
/// `f: {1..n} -> {1..n}`, with particle `i` placed at `x_{f(i)}`.
///
/// Every configuration `y` with `|y - x| > 7NL` lying outside the union of
/// radius-`2nL` cubes at these centers is separable from `x`; that covering
/// property is not assumed but checked by [`verify_candidate_cover`].
pub fn candidate_centers(x: &Config) -> Vec<Config> {
    let n = x.n();
    let d = x.d();
    assert!(n <= 8, "candidate family of size n^n limited to n <= 8");
    let count = kappa(n);
    let mut out = Vec::with_capacity(count as usize);
    let mut assignment = vec![0usize; n];
    for mut code in 0..count {
        for slot in (0..n).rev() {
            assignment[slot] = (code % n as u64) as usize;
            code /= n as u64;
        }
        let mut coords = Vec::with_capacity(n * d);
        for &src in &assignment {
            coords.extend_from_slice(x.particle(src));
        }
        out.push(Config::new(n, d, coords).expect("shape preserved"));
    }
    out
}

/// Spread criterion: `|x - y| > max_{i,j} |y_i - y_j| + 3NL`.
///
/// When true, a pre-separability witness for `C_L(x)` from `C_L(y)` exists;
/// the implication is exercised by the oracle tests rather than assumed.
pub fn separable_by_spread(x: &Config, y: &Config, l: i64, big_n: usize) -> Result<bool> {
    if x.n() != y.n() || x.d() != y.d() {
        return Err(LabError::Shape("configs have different shapes".into()));
    }
    let spread = y.cloud_diameter();
    Ok(point_max_norm(x.flat(), y.flat()) > spread + 3 * big_n as i64 * l)
}

/// Result of the exhaustive covering check around one configuration.
#[derive(Clone, Debug, Serialize)]
pub struct CoverCheck {
    pub checked: u64,
    pub skipped_near: u64,
    pub skipped_covered: u64,
    pub counterexamples: Vec<Config>,
}

/// Exhaustively verify the covering property of [`candidate_centers`] for
/// all `y` in the box of radius `box_radius` (max-norm) around `x`:
/// any `y` with `|y - x| > 7NL` outside all radius-`2nL` candidate cubes
/// must be separable from `x` at scale `L`. Returns every counterexample
/// found (none expected).
pub fn verify_candidate_cover(x: &Config, l: i64, big_n: usize, box_radius: i64) -> CoverCheck {
    let n = x.n();
    let d = x.d();
    let nd = n * d;
    let centers: Vec<Vec<i64>> = candidate_centers(x).iter().map(|c| c.flat().to_vec()).collect();
    let cover_radius = 2 * n as i64 * l;
    let threshold = 7 * big_n as i64 * l;

    let mut y = vec![0i64; nd];
    let lo: Vec<i64> = x.flat().iter().map(|&c| c - box_radius).collect();
    let hi: Vec<i64> = x.flat().iter().map(|&c| c + box_radius).collect();
    y.copy_from_slice(&lo);

    let mut checked = 0u64;
    let mut skipped_near = 0u64;
    let mut skipped_covered = 0u64;
    let mut counterexamples = Vec::new();

    'odometer: loop {
        if point_max_norm(&y, x.flat()) <= threshold {
            skipped_near += 1;
        } else if centers.iter().any(|c| point_max_norm(&y, c) <= cover_radius) {
            skipped_covered += 1;
        } else {
            checked += 1;
            if !cubes_separable_flat(x.flat(), &y, n, d, l, big_n) {
                counterexamples.push(Config::new(n, d, y.clone()).expect("shape"));
            }
        }
        for a in (0..nd).rev() {
            y[a] += 1;
            if y[a] <= hi[a] {
                continue 'odometer;
            }
            y[a] = lo[a];
        }
        break;
    }
    CoverCheck {
        checked,
        skipped_near,
        skipped_covered,
        counterexamples,
    }
}
