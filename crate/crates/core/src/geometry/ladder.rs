//! The length-scale ladder `L_{k+1} = floor(L_k^{3/2}) + 1`.

use crate::error::{LabError, Result};
use serde::Serialize;

/// Integer square root of a u128 (Newton), exact floor.
pub fn isqrt_u128(v: u128) -> u128 {
    if v < 2 {
        return v;
    }
    let mut x = 1u128 << ((128 - v.leading_zeros()).div_ceil(2));
    loop {
        let y = (x + v / x) / 2;
        if y >= x {
            break;
        }
        x = y;
    }
    x
}

/// floor(L^{3/2}) computed exactly as isqrt(L^3).
fn floor_l_three_halves(l: i64) -> Result<i64> {
    let cube = (l as u128)
        .checked_pow(3)
        .ok_or_else(|| LabError::InvalidArgument(format!("ladder overflow at L={l}")))?;
    let r = isqrt_u128(cube);
    i64::try_from(r).map_err(|_| LabError::InvalidArgument(format!("ladder overflow at L={l}")))
}

/// The scale sequence `L_0, ..., L_K` with exponent alpha = 3/2.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ScaleLadder {
    pub l0: i64,
    pub levels: Vec<i64>,
    /// true when built in the relaxed experimental mode (L0 >= 2).
    pub relaxed: bool,
}

impl ScaleLadder {
    /// Standard mode: requires L0 > 3.
    pub fn new(l0: i64, k: usize) -> Result<Self> {
        if l0 <= 3 {
            return Err(LabError::InvalidArgument(format!(
                "L0 must exceed 3 (got {l0}); use new_relaxed for small ladders"
            )));
        }
        Self::build(l0, k, false)
    }

    /// Relaxed experimental mode: allows L0 >= 2, flagged in the result.
    pub fn new_relaxed(l0: i64, k: usize) -> Result<Self> {
        if l0 < 2 {
            return Err(LabError::InvalidArgument(format!("L0 must be >= 2 (got {l0})")));
        }
        Self::build(l0, k, true)
    }

    fn build(l0: i64, k: usize, relaxed: bool) -> Result<Self> {
        let mut levels = Vec::with_capacity(k + 1);
        let mut l = l0;
        levels.push(l);
        for _ in 0..k {
            let next = floor_l_three_halves(l)? + 1;
            debug_assert!(next > l);
            levels.push(next);
            l = next;
        }
        Ok(ScaleLadder { l0, levels, relaxed })
    }

    pub fn level(&self, k: usize) -> i64 {
        self.levels[k]
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Index k with levels[k] == radius, if the radius sits on the ladder.
    pub fn index_of(&self, radius: i64) -> Option<usize> {
        self.levels.iter().position(|&l| l == radius)
    }

    /// The predecessor scale l with `radius = floor(l^{3/2}) + 1`, required
    /// by tunnelling searches. Errors when `radius` is L_0 or off-ladder.
    pub fn predecessor(&self, radius: i64) -> Result<i64> {
        match self.index_of(radius) {
            Some(k) if k > 0 => Ok(self.levels[k - 1]),
            _ => Err(LabError::NotOnLadder {
                radius,
                levels: self.levels.clone(),
            }),
        }
    }
}
