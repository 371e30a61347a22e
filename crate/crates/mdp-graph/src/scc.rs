use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};

/// Strongly connected components of the graph on `0..n` with the given edges.
/// Each component is sorted; components come in reverse topological order
/// (a component only has edges into components listed before it).
pub fn sccs(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Vec<Vec<usize>> {
    let mut g: DiGraph<(), ()> = DiGraph::with_capacity(n, 0);
    for _ in 0..n {
        g.add_node(());
    }
    for (a, b) in edges {
        g.add_edge(NodeIndex::new(a), NodeIndex::new(b), ());
    }
    tarjan_scc(&g)
        .into_iter()
        .map(|c| {
            let mut c: Vec<usize> = c.into_iter().map(NodeIndex::index).collect();
            c.sort_unstable();
            c
        })
        .collect()
}

/// Nodes reachable from `start` (included) following `succ`.
pub fn forward_reach(n: usize, start: &[usize], mut succ: impl FnMut(usize, &mut Vec<usize>)) -> Vec<bool> {
    let mut seen = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    for &s in start {
        if !seen[s] {
            seen[s] = true;
            stack.push(s);
        }
    }
    let mut buf = Vec::new();
    while let Some(s) = stack.pop() {
        buf.clear();
        succ(s, &mut buf);
        for &t in &buf {
            if !seen[t] {
                seen[t] = true;
                stack.push(t);
            }
        }
    }
    seen
}
