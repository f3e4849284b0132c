//! FI/PI classification and maximal singular-cube counts.

use super::separability::{is_separable, kappa};
use super::{full_projection, point_max_norm, projection, Config, Rectangle};
use crate::error::{LabError, Result};
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Interactivity {
    #[serde(rename = "FI")]
    Fully,
    #[serde(rename = "PI")]
    Partially,
}

/// Classification of an equal-radius cube. `split` (1-based indices, present
/// for PI cubes) is a pair (J, J^c) whose projections are farther than r_0
/// apart.
#[derive(Clone, Debug, Serialize)]
pub struct InteractivityVerdict {
    pub kind: Interactivity,
    pub diameter: i64,
    pub split: Option<(Vec<usize>, Vec<usize>)>,
}

/// A cube is fully interactive iff its particle cloud has diameter at most
/// `n (2L + r_0)`. For PI cubes the split is found by single-linkage
/// clustering of particle centers at threshold `2L + r_0`: the component of
/// particle 1 forms J.
pub fn classify_interactivity(c: &Rectangle, r0: i64) -> Result<InteractivityVerdict> {
    let l = c
        .equal_radius()
        .ok_or_else(|| LabError::InvalidArgument("classification needs equal radii".into()))?;
    let n = c.n();
    let diameter = c.center.cloud_diameter();
    if diameter <= n as i64 * (2 * l + r0) {
        return Ok(InteractivityVerdict {
            kind: Interactivity::Fully,
            diameter,
            split: None,
        });
    }
    // Union components of the graph with edges |u_i - u_j| <= 2L + r_0.
    let threshold = 2 * l + r0;
    let mut comp: Vec<usize> = (0..n).collect();
    fn find(comp: &mut Vec<usize>, i: usize) -> usize {
        let mut root = i;
        while comp[root] != root {
            root = comp[root];
        }
        let mut cur = i;
        while comp[cur] != root {
            let next = comp[cur];
            comp[cur] = root;
            cur = next;
        }
        root
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if point_max_norm(c.center.particle(i), c.center.particle(j)) <= threshold {
                let (a, b) = (find(&mut comp, i), find(&mut comp, j));
                if a != b {
                    comp[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let root0 = find(&mut comp, 0);
    let mut j_side = Vec::new();
    let mut jc_side = Vec::new();
    for i in 0..n {
        if find(&mut comp, i) == root0 {
            j_side.push(i + 1);
        } else {
            jc_side.push(i + 1);
        }
    }
    debug_assert!(!jc_side.is_empty(), "diameter above threshold forces a split");
    Ok(InteractivityVerdict {
        kind: Interactivity::Partially,
        diameter,
        split: Some((j_side, jc_side)),
    })
}

/// Disjointness of full projections of two FI cubes that are far apart.
#[derive(Clone, Debug, Serialize)]
pub struct FiDisjointness {
    pub preconditions_met: bool,
    pub disjoint: bool,
}

/// Checks `Pi C_L(u) \cap Pi C_L(v) = empty` by explicit set enumeration.
/// Preconditions (both cubes FI, `|u - v| > 7nL`, `L > 2 r_0`) are reported,
/// not asserted; under them the projections are always disjoint.
pub fn fi_projection_disjointness(u: &Config, v: &Config, l: i64, r0: i64) -> Result<FiDisjointness> {
    if u.n() != v.n() || u.d() != v.d() {
        return Err(LabError::Shape("configs have different shapes".into()));
    }
    let cu = Rectangle::cube(u.clone(), l)?;
    let cv = Rectangle::cube(v.clone(), l)?;
    let n = u.n() as i64;
    let pre = classify_interactivity(&cu, r0)?.kind == Interactivity::Fully
        && classify_interactivity(&cv, r0)?.kind == Interactivity::Fully
        && point_max_norm(u.flat(), v.flat()) > 7 * n * l
        && l > 2 * r0;
    let pu = full_projection(&cu);
    let pv = full_projection(&cv);
    Ok(FiDisjointness {
        preconditions_met: pre,
        disjoint: pu.intersection(&pv).next().is_none(),
    })
}

/// The four maximal counts over a family of scanned sub-cubes.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SingularCounts {
    pub m: usize,
    pub m_sep: usize,
    pub m_pi: usize,
    pub m_fi: usize,
    /// Counts are exact subset maxima; false means the greedy lower bound.
    pub exact: bool,
    /// `M >= kappa(n)+2  =>  M_sep >= 2`, checked whenever exact.
    pub lemma43_ok: bool,
}

const EXACT_LIMIT: usize = 12;

fn max_compatible(indices: &[usize], compatible: &dyn Fn(usize, usize) -> bool, exact: bool) -> usize {
    if indices.is_empty() {
        return 0;
    }
    if exact {
        let k = indices.len();
        let mut best = 0usize;
        for mask in 1u32..(1 << k) {
            let picked: Vec<usize> = (0..k).filter(|&i| mask & (1 << i) != 0).map(|i| indices[i]).collect();
            if picked.len() <= best {
                continue;
            }
            let ok = picked
                .iter()
                .enumerate()
                .all(|(a, &i)| picked[a + 1..].iter().all(|&j| compatible(i, j)));
            if ok {
                best = picked.len();
            }
        }
        best
    } else {
        let mut chosen: Vec<usize> = Vec::new();
        for &i in indices {
            if chosen.iter().all(|&j| compatible(i, j)) {
                chosen.push(i);
            }
        }
        chosen.len()
    }
}

/// Maximal numbers of singular cubes at scale `L_k` that are pairwise far
/// (`|u - v| > 7 N L_k`), pairwise separable, and the PI/FI-restricted
/// variants of the far count. Exact subset search up to 12 singular cubes,
/// greedy lower bound above (flagged).
pub fn count_singular(
    centers: &[Config],
    singular: &[bool],
    kinds: &[Interactivity],
    l_k: i64,
    big_n: usize,
) -> Result<SingularCounts> {
    if centers.len() != singular.len() || centers.len() != kinds.len() {
        return Err(LabError::Shape("parallel lists have different lengths".into()));
    }
    let singular_idx: Vec<usize> = (0..centers.len()).filter(|&i| singular[i]).collect();
    let exact = singular_idx.len() <= EXACT_LIMIT;

    let far = |i: usize, j: usize| {
        point_max_norm(centers[i].flat(), centers[j].flat()) > 7 * big_n as i64 * l_k
    };
    let sep = |i: usize, j: usize| {
        let a = Rectangle::cube(centers[i].clone(), l_k).expect("radius >= 0");
        let b = Rectangle::cube(centers[j].clone(), l_k).expect("radius >= 0");
        is_separable(&a, &b, big_n).map(|v| v.separable).unwrap_or(false)
    };

    let m = max_compatible(&singular_idx, &far, exact);
    let m_sep = max_compatible(&singular_idx, &sep, exact);
    let pi_idx: Vec<usize> = singular_idx
        .iter()
        .copied()
        .filter(|&i| kinds[i] == Interactivity::Partially)
        .collect();
    let fi_idx: Vec<usize> = singular_idx
        .iter()
        .copied()
        .filter(|&i| kinds[i] == Interactivity::Fully)
        .collect();
    let m_pi = max_compatible(&pi_idx, &far, exact);
    let m_fi = max_compatible(&fi_idx, &far, exact);

    let n = if centers.is_empty() { 1 } else { centers[0].n() };
    let lemma43_ok = !exact || (m as u64) < kappa(n) + 2 || m_sep >= 2;
    Ok(SingularCounts {
        m,
        m_sep,
        m_pi,
        m_fi,
        exact,
        lemma43_ok,
    })
}
