use serde::Serialize;

use crate::grid::CubeAddr;

/// Relative slack under which two scanned values count as tied.
pub const TIE_RTOL: f64 = 1e-12;

/// A supremum over a cube family together with a cube attaining it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sup {
    pub value: f64,
    pub witness: CubeAddr,
}

impl Serialize for CubeAddr {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("CubeAddr", 2)?;
        st.serialize_field("level", &self.level())?;
        st.serialize_field("index", &self.index())?;
        st.end()
    }
}

/// Maximum of `value` over `cubes`.
///
/// The witness is the smallest cube (level first, then row-major index) whose
/// value is within [`TIE_RTOL`] of the maximum, so near-ties caused by
/// rounding resolve the same way as exact ties. An empty family yields
/// value 0 witnessed by `fallback`.
pub fn sup_over(
    cubes: impl Iterator<Item = CubeAddr>,
    fallback: CubeAddr,
    mut value: impl FnMut(CubeAddr) -> f64,
) -> Sup {
    let scored: Vec<(CubeAddr, f64)> = cubes.map(|q| (q, value(q))).collect();
    let max = scored.iter().map(|&(_, v)| v).fold(0.0f64, f64::max);
    let floor = if max.is_infinite() { max } else { max - TIE_RTOL * max };
    let witness = scored
        .iter()
        .filter(|&&(_, v)| v >= floor)
        .map(|&(q, _)| q)
        .min()
        .unwrap_or(fallback);
    Sup { value: max, witness }
}

/// `lhs / rhs` with `0/0 = 0` and `x/0 = ∞` for `x > 0`.
pub fn ratio(lhs: f64, rhs: f64) -> f64 {
    if rhs == 0.0 {
        if lhs == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        lhs / rhs
    }
}
