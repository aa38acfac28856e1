//! Brute-force cycle detection for small digraphs.

/// Whether the subgraph induced by `selected` contains a directed cycle.
/// A finite digraph has a cycle iff some nonempty node set has every member
/// pointing into the set, so all `2^n` subsets are tried.
pub fn has_cycle(n: usize, arcs: &[(usize, usize)], selected: &[bool]) -> bool {
    assert!(n <= 16);
    (1u32..1 << n).any(|mask| {
        let inside = |v: usize| mask >> v & 1 == 1;
        (0..n).all(|v| !inside(v) || (selected[v] && arcs.iter().any(|&(a, b)| a == v && inside(b))))
    })
}

/// Whether `nodes` (in any order) can be arranged into a directed cycle of
/// `arcs` visiting each node once, checked over all permutations.
pub fn is_simple_cycle(nodes: &[usize], arcs: &[(usize, usize)]) -> bool {
    if nodes.len() < 2 {
        return false;
    }
    let mut perm: Vec<usize> = nodes[1..].to_vec();
    permutations(&mut perm, 0, &mut |p| {
        let mut prev = nodes[0];
        for &v in p.iter().chain(std::iter::once(&nodes[0])) {
            if !arcs.contains(&(prev, v)) {
                return false;
            }
            prev = v;
        }
        true
    })
}

fn permutations(items: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize]) -> bool) -> bool {
    if k == items.len() {
        return f(items);
    }
    for i in k..items.len() {
        items.swap(k, i);
        if permutations(items, k + 1, f) {
            items.swap(k, i);
            return true;
        }
        items.swap(k, i);
    }
    false
}
