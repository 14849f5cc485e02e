//! Shape arithmetic and strided iteration helpers.

pub fn numel(shape: &[usize]) -> usize {
    shape.iter().product()
}

pub(crate) fn contiguous_strides(shape: &[usize]) -> Vec<usize> {
    let mut strides = vec![0; shape.len()];
    let mut acc = 1;
    for (s, &d) in strides.iter_mut().zip(shape).rev() {
        *s = acc;
        acc *= d;
    }
    strides
}

/// Numpy-style broadcast of two shapes, `None` if incompatible.
pub fn broadcast_shapes(a: &[usize], b: &[usize]) -> Option<Vec<usize>> {
    let rank = a.len().max(b.len());
    let mut out = vec![0; rank];
    for i in 0..rank {
        let da = if i + a.len() >= rank { a[i + a.len() - rank] } else { 1 };
        let db = if i + b.len() >= rank { b[i + b.len() - rank] } else { 1 };
        out[i] = match (da, db) {
            (x, y) if x == y => x,
            (1, y) => y,
            (x, 1) => x,
            _ => return None,
        };
    }
    Some(out)
}

/// Strides for reading a tensor of shape `small` as if it had shape `big`
/// (broadcast dims get stride 0). Panics when `small` does not broadcast to `big`.
pub(crate) fn broadcast_strides(small: &[usize], big: &[usize]) -> Vec<usize> {
    assert!(
        small.len() <= big.len(),
        "cannot broadcast {:?} to lower-rank {:?}",
        small,
        big
    );
    let offset = big.len() - small.len();
    let own = contiguous_strides(small);
    (0..big.len())
        .map(|i| {
            if i < offset {
                0
            } else {
                let d = small[i - offset];
                assert!(
                    d == big[i] || d == 1,
                    "cannot broadcast {:?} to {:?}",
                    small,
                    big
                );
                if d == 1 {
                    0
                } else {
                    own[i - offset]
                }
            }
        })
        .collect()
}

/// Calls `f(dst_index, src_offset)` for every element of `big` in row-major
/// order, with `src_offset` computed from `strides`.
pub(crate) fn for_each_strided(big: &[usize], strides: &[usize], mut f: impl FnMut(usize, usize)) {
    let n = numel(big);
    if n == 0 {
        return;
    }
    if big.is_empty() {
        f(0, 0);
        return;
    }
    let rank = big.len();
    // Innermost run is handled in a tight loop.
    let inner = big[rank - 1];
    let inner_stride = strides[rank - 1];
    let mut idx = vec![0usize; rank];
    let mut base = 0usize;
    let mut dst = 0usize;
    loop {
        let mut off = base;
        for _ in 0..inner {
            f(dst, off);
            dst += 1;
            off += inner_stride;
        }
        // Increment the outer multi-index.
        let mut d = rank - 1;
        loop {
            if d == 0 {
                return;
            }
            d -= 1;
            idx[d] += 1;
            base += strides[d];
            if idx[d] < big[d] {
                break;
            }
            base -= strides[d] * idx[d];
            idx[d] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn broadcast_shapes_numpy_rules() {
        assert_eq!(broadcast_shapes(&[2, 3, 4], &[1, 3, 1]), Some(vec![2, 3, 4]));
        assert_eq!(broadcast_shapes(&[4], &[2, 1]), Some(vec![2, 4]));
        assert_eq!(broadcast_shapes(&[], &[5]), Some(vec![5]));
        assert_eq!(broadcast_shapes(&[2], &[3]), None);
    }

    #[test]
    fn strided_walk_visits_broadcast_offsets() {
        let big = [2, 3];
        let strides = broadcast_strides(&[1, 3], &big);
        let mut seen = Vec::new();
        for_each_strided(&big, &strides, |dst, src| seen.push((dst, src)));
        assert_eq!(seen, vec![(0, 0), (1, 1), (2, 2), (3, 0), (4, 1), (5, 2)]);
    }

    #[test]
    fn strided_walk_scalar() {
        let mut seen = Vec::new();
        for_each_strided(&[], &[], |d, s| seen.push((d, s)));
        assert_eq!(seen, vec![(0, 0)]);
    }
}
