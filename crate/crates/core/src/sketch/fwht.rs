use crate::error::{Error, Result};

/// In-place unnormalized fast Walsh–Hadamard transform in Sylvester order.
///
/// Replaces `v` with `H_m v`, where `H_1 = [1]` and
/// `H_2m = [[H_m, H_m], [H_m, -H_m]]`. Runs in `O(m log m)`.
pub fn fwht(v: &mut [f64]) -> Result<()> {
    let m = v.len();
    if !m.is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "fwht length {m} is not a power of two"
        )));
    }
    let mut h = 1;
    while h < m {
        for block in v.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
    Ok(())
}
