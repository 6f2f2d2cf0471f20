//! Genotype trees: typed program trees over the primitive registry.

use crate::primitives::{PrimId, Registry};
use crate::types::{Channel, GpType, ParamValue};

/// Path from the root to a node: child indices, empty for the root.
pub type NodePath = Vec<usize>;

pub fn path_string(path: &[usize]) -> String {
    if path.is_empty() {
        "root".to_string()
    } else {
        path.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(".")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Func { prim: PrimId, children: Vec<Node> },
    Channel(Channel),
    Param { ptype: GpType, value: ParamValue },
}

impl Node {
    pub fn gp_type(&self, reg: &Registry) -> GpType {
        match self {
            Node::Func { prim, .. } => reg.sig(*prim).return_type,
            Node::Channel(_) => GpType::Image,
            Node::Param { ptype, .. } => *ptype,
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Node::Func { children, .. } => 1 + children.iter().map(Node::size).sum::<usize>(),
            _ => 1,
        }
    }

    /// Depth in edges; a lone terminal has depth 0.
    pub fn depth(&self) -> usize {
        match self {
            Node::Func { children, .. } => {
                1 + children.iter().map(Node::depth).max().unwrap_or(0)
            }
            _ => 0,
        }
    }

    /// True when no classification or cascade node appears in the subtree,
    /// i.e. the subtree's value is a pure function of the input images.
    pub fn is_pure(&self, reg: &Registry) -> bool {
        match self {
            Node::Func { prim, children } => {
                use crate::types::Layer::*;
                let layer = reg.sig(*prim).layer;
                if matches!(layer, Classification | ClassificationCascade) {
                    return false;
                }
                children.iter().all(|c| c.is_pure(reg))
            }
            _ => true,
        }
    }
}

/// An untrained typed program tree. The root is always a summation node.
#[derive(Clone, Debug, PartialEq)]
pub struct GenotypeTree {
    pub root: Node,
}

impl GenotypeTree {
    pub fn new(root: Node) -> GenotypeTree {
        GenotypeTree { root }
    }

    pub fn size(&self) -> usize {
        self.root.size()
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    /// All nodes in preorder with their paths (root first).
    pub fn nodes(&self) -> Vec<(NodePath, &Node)> {
        let mut out = Vec::with_capacity(self.size());
        fn walk<'a>(node: &'a Node, path: &mut NodePath, out: &mut Vec<(NodePath, &'a Node)>) {
            out.push((path.clone(), node));
            if let Node::Func { children, .. } = node {
                for (i, c) in children.iter().enumerate() {
                    path.push(i);
                    walk(c, path, out);
                    path.pop();
                }
            }
        }
        walk(&self.root, &mut Vec::new(), &mut out);
        out
    }

    pub fn get(&self, path: &[usize]) -> Option<&Node> {
        let mut node = &self.root;
        for &i in path {
            match node {
                Node::Func { children, .. } => node = children.get(i)?,
                _ => return None,
            }
        }
        Some(node)
    }

    /// A copy of the tree with the subtree at `path` replaced.
    pub fn with_replaced(&self, path: &[usize], replacement: Node) -> GenotypeTree {
        fn rebuild(node: &Node, path: &[usize], replacement: &Node) -> Node {
            match path.split_first() {
                None => replacement.clone(),
                Some((&i, rest)) => match node {
                    Node::Func { prim, children } => {
                        let mut children = children.clone();
                        children[i] = rebuild(&children[i], rest, replacement);
                        Node::Func { prim: *prim, children }
                    }
                    _ => unreachable!("path descends into a terminal"),
                },
            }
        }
        GenotypeTree { root: rebuild(&self.root, path, &replacement) }
    }

    /// Check typing, arity, terminal domains, the summation-root constraint
    /// and the depth bound.
    pub fn validate(&self, reg: &Registry, max_depth: usize) -> Result<(), String> {
        match &self.root {
            Node::Func { prim, .. } if reg.sig(*prim).layer == crate::types::Layer::Summation => {}
            _ => return Err("root must be a summation node (Sum2/Sum3/Sum4)".into()),
        }
        if self.depth() > max_depth {
            return Err(format!("depth {} exceeds bound {}", self.depth(), max_depth));
        }
        fn check(node: &Node, reg: &Registry, path: &mut NodePath) -> Result<(), String> {
            match node {
                Node::Func { prim, children } => {
                    let sig = reg.sig(*prim);
                    if children.len() != sig.children.len() {
                        return Err(format!(
                            "{} at {} has {} children, expected {}",
                            sig.name,
                            path_string(path),
                            children.len(),
                            sig.children.len()
                        ));
                    }
                    for (i, (child, spec)) in children.iter().zip(sig.children.iter()).enumerate() {
                        let got = child.gp_type(reg);
                        if got != spec.gp_type {
                            return Err(format!(
                                "{} child {} at {} has type {}, expected {}",
                                sig.name,
                                i,
                                path_string(path),
                                got,
                                spec.gp_type
                            ));
                        }
                        path.push(i);
                        check(child, reg, path)?;
                        path.pop();
                    }
                    Ok(())
                }
                Node::Channel(c) => {
                    if reg.channels().contains(c) {
                        Ok(())
                    } else {
                        Err(format!("channel {} not available at {}", c.name(), path_string(path)))
                    }
                }
                Node::Param { ptype, value } => {
                    if reg.param_domain(*ptype).contains(value) {
                        Ok(())
                    } else {
                        Err(format!(
                            "value {:?} outside the {} domain at {}",
                            value,
                            ptype,
                            path_string(path)
                        ))
                    }
                }
            }
        }
        check(&self.root, reg, &mut Vec::new())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives::register_primitives;

    fn reg() -> Registry {
        register_primitives(3, 10).unwrap()
    }

    /// (Sum2 (LR (Hist Gray)) (SVM (LBP Gray)))
    fn small_tree(reg: &Registry) -> GenotypeTree {
        let hist = Node::Func {
            prim: reg.by_name("Hist").unwrap(),
            children: vec![Node::Channel(Channel::Gray)],
        };
        let lbp = Node::Func {
            prim: reg.by_name("LBP").unwrap(),
            children: vec![Node::Channel(Channel::Gray)],
        };
        let lr = Node::Func { prim: reg.by_name("LR").unwrap(), children: vec![hist] };
        let svm = Node::Func { prim: reg.by_name("SVM").unwrap(), children: vec![lbp] };
        GenotypeTree::new(Node::Func {
            prim: reg.by_name("Sum2").unwrap(),
            children: vec![lr, svm],
        })
    }

    #[test]
    fn size_depth_and_validation() {
        let reg = reg();
        let t = small_tree(&reg);
        assert_eq!(t.size(), 7);
        assert_eq!(t.depth(), 3);
        assert!(t.validate(&reg, 10).is_ok());
        assert!(t.validate(&reg, 2).is_err());
    }

    #[test]
    fn non_sum_root_is_rejected() {
        let reg = reg();
        let t = GenotypeTree::new(Node::Func {
            prim: reg.by_name("LR").unwrap(),
            children: vec![Node::Func {
                prim: reg.by_name("Hist").unwrap(),
                children: vec![Node::Channel(Channel::Gray)],
            }],
        });
        assert!(t.validate(&reg, 10).is_err());
    }

    #[test]
    fn wrong_channel_for_grayscale_registry() {
        let gray = register_primitives(1, 10).unwrap();
        let colour = reg();
        let mut t = small_tree(&colour);
        // Swap Gray for Red inside the first branch.
        t = t.with_replaced(&[0, 0, 0], Node::Channel(Channel::Red));
        assert!(t.validate(&colour, 10).is_ok());
        assert!(t.validate(&gray, 10).is_err());
    }

    #[test]
    fn replace_and_paths() {
        let reg = reg();
        let t = small_tree(&reg);
        let nodes = t.nodes();
        assert_eq!(nodes.len(), 7);
        assert_eq!(nodes[0].0, Vec::<usize>::new());
        assert!(matches!(t.get(&[0, 0, 0]), Some(Node::Channel(Channel::Gray))));
        let param_out_of_domain = GenotypeTree::new(Node::Func {
            prim: reg.by_name("Sum2").unwrap(),
            children: vec![
                Node::Func {
                    prim: reg.by_name("RF").unwrap(),
                    children: vec![
                        Node::Func {
                            prim: reg.by_name("Hist").unwrap(),
                            children: vec![Node::Channel(Channel::Gray)],
                        },
                        Node::Param { ptype: GpType::TreeCount, value: ParamValue::Int(51) },
                        Node::Param { ptype: GpType::TreeDepth, value: ParamValue::Int(10) },
                    ],
                },
                t.get(&[1]).unwrap().clone(),
            ],
        });
        let err = param_out_of_domain.validate(&reg, 10).unwrap_err();
        assert!(err.contains("TREE_COUNT"), "{err}");
    }
}
