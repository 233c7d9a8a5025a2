//! Enumeration of integer points in Euclidean balls.

/// Calls `f` for every `k ∈ Z^d` with `0 < |k|² ≤ radius_sq`.
///
/// With `half` set only one representative of each pair `{k, -k}` is
/// visited: the one whose first nonzero coordinate is positive.
pub fn for_each_in_ball(d: usize, radius_sq: i64, half: bool, mut f: impl FnMut(&[i64])) {
    if d == 0 || radius_sq <= 0 {
        return;
    }
    let mut k = vec![0i64; d];
    recurse(0, radius_sq, half, true, &mut k, &mut f);
}

fn recurse(
    axis: usize,
    remaining: i64,
    half: bool,
    leading_zero: bool,
    k: &mut [i64],
    f: &mut impl FnMut(&[i64]),
) {
    let d = k.len();
    let r = isqrt(remaining);
    let lo = if half && leading_zero { 0 } else { -r };
    for x in lo..=r {
        k[axis] = x;
        let rem = remaining - x * x;
        let lz = leading_zero && x == 0;
        if axis + 1 == d {
            if !lz {
                f(k);
            }
        } else {
            recurse(axis + 1, rem, half, lz, k, f);
        }
    }
    k[axis] = 0;
}

/// Floor of the square root of a nonnegative integer.
pub fn isqrt(n: i64) -> i64 {
    if n <= 0 {
        return 0;
    }
    let mut x = (n as f64).sqrt() as i64;
    while x * x > n {
        x -= 1;
    }
    while (x + 1) * (x + 1) <= n {
        x += 1;
    }
    x
}

pub fn norm_sq(k: &[i64]) -> i64 {
    k.iter().map(|x| x * x).sum()
}

/// True when the first nonzero coordinate is positive.
pub fn is_canonical(k: &[i64]) -> bool {
    k.iter().find(|&&x| x != 0).is_some_and(|&x| x > 0)
}
