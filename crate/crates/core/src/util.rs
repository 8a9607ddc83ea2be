//! Small shared helpers: mixed-radix indexing, distributions, float keys.

/// Writes the mixed-radix digits of `idx` into `out`, first digit most significant.
pub fn decode_radix(mut idx: usize, radices: &[usize], out: &mut [usize]) {
    for k in (0..radices.len()).rev() {
        out[k] = idx % radices[k];
        idx /= radices[k];
    }
}

pub fn decode_vec(idx: usize, radices: &[usize]) -> Vec<usize> {
    let mut out = vec![0; radices.len()];
    decode_radix(idx, radices, &mut out);
    out
}

pub fn encode_radix(digits: &[usize], radices: &[usize]) -> usize {
    digits
        .iter()
        .zip(radices)
        .fold(0, |acc, (&d, &r)| acc * r + d)
}

pub fn product(radices: &[usize]) -> usize {
    radices.iter().product()
}

/// Checked product; `None` when the result exceeds `cap`.
pub fn product_capped(radices: impl IntoIterator<Item = usize>, cap: usize) -> Option<usize> {
    let mut acc: usize = 1;
    for r in radices {
        acc = acc.checked_mul(r)?;
        if acc > cap {
            return None;
        }
    }
    Some(acc)
}

/// `base^exp`, or `None` when it exceeds `cap`.
pub fn pow_capped(base: usize, exp: usize, cap: usize) -> Option<usize> {
    product_capped(std::iter::repeat_n(base, exp), cap)
}

/// Normalizes in place; returns the original total.
pub fn normalize(v: &mut [f64]) -> f64 {
    let total: f64 = v.iter().sum();
    if total > 0.0 {
        for p in v.iter_mut() {
            *p /= total;
        }
    }
    total
}

pub fn uniform(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

pub fn delta(n: usize, k: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[k] = 1.0;
    v
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Rounds a probability to the grid used for hashing beliefs.
pub fn round_key(p: f64, grid: f64) -> i64 {
    (p / grid).round() as i64
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(values: &[f64], tol: f64) -> usize {
    let mut best = 0;
    for (k, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] + tol {
            best = k;
        }
    }
    best
}
