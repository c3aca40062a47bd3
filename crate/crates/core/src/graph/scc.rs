use super::DirectedGraph;

/// Strongly connected components and a topological order of the
/// condensation.
///
/// Component ids follow Tarjan's completion order, which is a reverse
/// topological order; `topo_order` lists component ids so that every edge
/// between components runs from a lower to a higher position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SccDecomposition {
    component_of: Vec<usize>,
    topo_order: Vec<usize>,
    topo_index: Vec<usize>,
    members: Vec<Vec<usize>>,
}

impl SccDecomposition {
    pub fn n_components(&self) -> usize {
        self.members.len()
    }

    pub fn component_of(&self, u: usize) -> usize {
        self.component_of[u]
    }

    pub fn topo_order(&self) -> &[usize] {
        &self.topo_order
    }

    /// Position of component `c` in the topological order.
    pub fn topo_index(&self, c: usize) -> usize {
        self.topo_index[c]
    }

    /// Topological position of the component containing node `u`.
    pub fn node_topo_index(&self, u: usize) -> usize {
        self.topo_index[self.component_of[u]]
    }

    pub fn members(&self, c: usize) -> &[usize] {
        &self.members[c]
    }
}

const UNVISITED: usize = usize::MAX;

/// Iterative Tarjan; no recursion so deep chains cannot overflow the stack.
pub fn tarjan_scc(g: &DirectedGraph) -> SccDecomposition {
    let n = g.n_nodes();
    let mut index = vec![UNVISITED; n];
    let mut lowlink = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut component_of = vec![UNVISITED; n];
    let mut members: Vec<Vec<usize>> = Vec::new();
    let mut next_index = 0;
    // (node, position in its successor list)
    let mut call: Vec<(usize, usize)> = Vec::new();

    for root in 0..n {
        if index[root] != UNVISITED {
            continue;
        }
        call.push((root, 0));
        index[root] = next_index;
        lowlink[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&mut (u, ref mut pos)) = call.last_mut() {
            let succ = g.out_neighbors(u);
            if *pos < succ.len() {
                let v = succ[*pos];
                *pos += 1;
                if index[v] == UNVISITED {
                    index[v] = next_index;
                    lowlink[v] = next_index;
                    next_index += 1;
                    stack.push(v);
                    on_stack[v] = true;
                    call.push((v, 0));
                } else if on_stack[v] {
                    lowlink[u] = lowlink[u].min(index[v]);
                }
                continue;
            }

            call.pop();
            if let Some(&(parent, _)) = call.last() {
                lowlink[parent] = lowlink[parent].min(lowlink[u]);
            }
            if lowlink[u] == index[u] {
                let c = members.len();
                let mut comp = Vec::new();
                loop {
                    let w = stack.pop().expect("tarjan stack underflow");
                    on_stack[w] = false;
                    component_of[w] = c;
                    comp.push(w);
                    if w == u {
                        break;
                    }
                }
                comp.sort_unstable();
                members.push(comp);
            }
        }
    }

    let k = members.len();
    let topo_order: Vec<usize> = (0..k).rev().collect();
    let mut topo_index = vec![0; k];
    for (pos, &c) in topo_order.iter().enumerate() {
        topo_index[c] = pos;
    }
    SccDecomposition {
        component_of,
        topo_order,
        topo_index,
        members,
    }
}
