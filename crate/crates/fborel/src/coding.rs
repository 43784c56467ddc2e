//! Cantor pairing and the balanced k-ary coders built from it.

/// Cantor pairing `(x+y)(x+y+1)/2 + y`. `None` on overflow.
pub fn pair(x: u64, y: u64) -> Option<u64> {
    let s = x.checked_add(y)?;
    let t = (s as u128) * (s as u128 + 1) / 2 + y as u128;
    u64::try_from(t).ok()
}

/// Inverse of [`pair`].
pub fn unpair(z: u64) -> (u64, u64) {
    // largest w with w(w+1)/2 <= z
    let zz = z as u128;
    let mut w = ((((8 * zz + 1) as f64).sqrt() as u128).saturating_sub(1)) / 2;
    while (w + 1) * (w + 2) / 2 <= zz {
        w += 1;
    }
    while w * (w + 1) / 2 > zz {
        w -= 1;
    }
    let y = zz - w * (w + 1) / 2;
    let x = w - y;
    (x as u64, y as u64)
}

/// Bijection `ω^k → ω` for `k >= 1`: identity for `k = 1`, otherwise the pair
/// of the codes of the left half (`⌈k/2⌉` entries) and the right half.
pub fn encode_tuple(xs: &[u64]) -> Option<u64> {
    match xs.len() {
        0 => Some(0),
        1 => Some(xs[0]),
        k => {
            let mid = k.div_ceil(2);
            pair(encode_tuple(&xs[..mid])?, encode_tuple(&xs[mid..])?)
        }
    }
}

/// Inverse of [`encode_tuple`] for a fixed arity `k`.
pub fn decode_tuple(code: u64, k: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(k);
    decode_into(code, k, &mut out);
    out
}

fn decode_into(code: u64, k: usize, out: &mut Vec<u64>) {
    match k {
        0 => {}
        1 => out.push(code),
        _ => {
            let mid = k.div_ceil(2);
            let (l, r) = unpair(code);
            decode_into(l, mid, out);
            decode_into(r, k - mid, out);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_small_values() {
        assert_eq!(pair(0, 0), Some(0));
        assert_eq!(pair(1, 0), Some(1));
        assert_eq!(pair(0, 1), Some(2));
        assert_eq!(pair(2, 0), Some(3));
        for z in 0..5000 {
            let (x, y) = unpair(z);
            assert_eq!(pair(x, y), Some(z));
        }
    }

    #[test]
    fn tuples_round_trip() {
        for k in 1..8 {
            for code in 0..300 {
                let t = decode_tuple(code, k);
                assert_eq!(t.len(), k);
                assert_eq!(encode_tuple(&t), Some(code));
            }
        }
    }

    #[test]
    fn overflow_is_reported() {
        assert_eq!(pair(u64::MAX, 1), None);
        assert!(pair(1 << 31, 1 << 31).is_some());
        assert_eq!(pair(1 << 33, 1 << 33), None);
    }
}
