//! Index-tuple bookkeeping for antisymmetric storage.

/// Concatenates two strictly increasing tuples and sorts the result,
/// returning the sign of the sorting permutation. `None` when the tuples
/// share an index.
pub fn shuffle_sign(a: &[usize], b: &[usize]) -> Option<(Vec<usize>, i32)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let mut inversions = 0usize;
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i] == b[j] {
            return None;
        }
        if a[i] < b[j] {
            out.push(a[i]);
            i += 1;
        } else {
            // b[j] jumps over every remaining element of a
            inversions += a.len() - i;
            out.push(b[j]);
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    Some((out, if inversions.is_multiple_of(2) { 1 } else { -1 }))
}

/// Sorts an arbitrary index list, returning the permutation sign, or `None`
/// when an index repeats.
pub fn sort_with_sign(indices: &[usize]) -> Option<(Vec<usize>, i32)> {
    let mut v = indices.to_vec();
    let mut sign = 1;
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] > v[j] {
            v.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if v.windows(2).any(|w| w[0] == w[1]) {
        None
    } else {
        Some((v, sign))
    }
}

/// Removes `index` from a sorted tuple, returning the sign `(-1)^position`
/// of contracting into that slot.
pub fn remove_slot(tuple: &[usize], index: usize) -> Option<(Vec<usize>, i32)> {
    let pos = tuple.iter().position(|&t| t == index)?;
    let mut rest = tuple.to_vec();
    rest.remove(pos);
    Some((rest, if pos % 2 == 0 { 1 } else { -1 }))
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc = 1usize;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// All strictly increasing `k`-tuples from `0..n` in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(binomial(n, k));
    if k > n {
        return out;
    }
    let mut current: Vec<usize> = (0..k).collect();
    loop {
        out.push(current.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if current[i] < n - k + i {
                current[i] += 1;
                for j in i + 1..k {
                    current[j] = current[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Position of a strictly increasing tuple in the lexicographic order used
/// by [`subsets`].
pub fn rank(tuple: &[usize], n: usize) -> usize {
    let k = tuple.len();
    let mut r = 0;
    let mut start = 0;
    for (i, &c) in tuple.iter().enumerate() {
        for j in start..c {
            r += binomial(n - 1 - j, k - 1 - i);
        }
        start = c + 1;
    }
    r
}
