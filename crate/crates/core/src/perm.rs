//! Permutations of `{0, …, n−1}` in one-line notation: `p[i]` is the image
//! of `i`.

pub type Perm = Vec<u8>;

pub fn identity(n: usize) -> Perm {
    (0..n as u8).collect()
}

pub fn is_identity(p: &[u8]) -> bool {
    p.iter().enumerate().all(|(i, &v)| v as usize == i)
}

/// `a ∘ b` (apply `b` first).
pub fn compose(a: &[u8], b: &[u8]) -> Perm {
    b.iter().map(|&i| a[i as usize]).collect()
}

pub fn inverse(p: &[u8]) -> Perm {
    let mut out = vec![0u8; p.len()];
    for (i, &v) in p.iter().enumerate() {
        out[v as usize] = i as u8;
    }
    out
}

/// All permutations of `n` points in lexicographic order.
pub fn all_perms(n: usize) -> Vec<Perm> {
    let mut out = Vec::new();
    let mut cur = identity(n);
    loop {
        out.push(cur.clone());
        // next_permutation
        let Some(i) = (1..n).rev().find(|&i| cur[i - 1] < cur[i]) else {
            break;
        };
        let j = (i..n).rev().find(|&j| cur[j] > cur[i - 1]).unwrap();
        cur.swap(i - 1, j);
        cur[i..].reverse();
    }
    out
}

pub fn is_valid(p: &[u8]) -> bool {
    let mut seen = vec![false; p.len()];
    for &v in p {
        match seen.get_mut(v as usize) {
            Some(s) if !*s => *s = true,
            _ => return false,
        }
    }
    true
}

/// Whether the group generated by `perms` acts transitively on `points`.
pub fn is_transitive_on(perms: &[Perm], points: &[usize]) -> bool {
    let Some(&start) = points.first() else {
        return true;
    };
    let mut seen = vec![start];
    let mut stack = vec![start];
    while let Some(x) = stack.pop() {
        for p in perms {
            let y = p[x] as usize;
            if !seen.contains(&y) {
                seen.push(y);
                stack.push(y);
            }
        }
    }
    points.iter().all(|x| seen.contains(x))
}

pub fn is_transitive(perms: &[Perm], n: usize) -> bool {
    is_transitive_on(perms, &(0..n).collect::<Vec<_>>())
}

/// 1-based rendering, e.g. `[2,3,1]`.
pub fn render(p: &[u8]) -> String {
    let parts: Vec<String> = p.iter().map(|v| (v + 1).to_string()).collect();
    format!("[{}]", parts.join(","))
}

pub fn order(p: &[u8]) -> usize {
    let mut k = 1;
    let mut cur = p.to_vec();
    while !is_identity(&cur) {
        cur = compose(p, &cur);
        k += 1;
    }
    k
}
