//! Canonical s-expression text form for genotypes.
//!
//! One tree per line: `(Sum2 (RF (Hist (Mean Gray)) t=100 d=20) (LR (SIFT Gray)))`.
//! Channel terminals appear bare; parameter terminals as `key=value` where
//! the key comes from the parent's signature slot. Orientation and frequency
//! values that are exact rational multiples of pi render as `3pi/8`-style
//! fractions; anything else renders as a shortest round-trip decimal.
//! `parse(render(t)) == t` for every valid tree.

use crate::error::{EdlgpError, Result};
use crate::primitives::{rational_pi, Registry};
use crate::tree::{GenotypeTree, Node};
use crate::types::{Channel, GpType, ParamValue};

/// Render a value, preferring an exact `<n>pi/<d>` form.
pub fn render_real(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    for den in 1..=16i64 {
        let num = (v * den as f64 / std::f64::consts::PI).round() as i64;
        if num > 0 && rational_pi(num, den) == v {
            return match (num, den) {
                (1, 1) => "pi".to_string(),
                (n, 1) => format!("{n}pi"),
                (1, d) => format!("pi/{d}"),
                (n, d) => format!("{n}pi/{d}"),
            };
        }
    }
    format!("{v}")
}

/// Parse a real value in decimal or `<n>pi/<d>` notation.
pub fn parse_real(s: &str) -> Option<f64> {
    if let Some(rest) = s.strip_suffix("pi") {
        let num = if rest.is_empty() { 1 } else { rest.parse::<i64>().ok()? };
        return Some(rational_pi(num, 1));
    }
    if let Some(idx) = s.find("pi/") {
        let (num_s, den_s) = (&s[..idx], &s[idx + 3..]);
        let num = if num_s.is_empty() { 1 } else { num_s.parse::<i64>().ok()? };
        let den = den_s.parse::<i64>().ok()?;
        if den == 0 {
            return None;
        }
        return Some(rational_pi(num, den));
    }
    s.parse::<f64>().ok()
}

fn render_param(key: &str, value: ParamValue) -> String {
    match value {
        ParamValue::Int(v) => format!("{key}={v}"),
        ParamValue::Real(v) => format!("{key}={}", render_real(v)),
    }
}

fn render_node_inner(node: &Node, reg: &Registry, out: &mut String) {
    match node {
        Node::Channel(c) => out.push_str(c.name()),
        Node::Param { value, .. } => {
            // A bare parameter node has no slot context; this only happens
            // when rendering a subtree rooted at a parameter, where the type
            // name is unambiguous enough.
            let key = match node.gp_type(reg) {
                GpType::TreeCount => "t",
                GpType::TreeDepth => "d",
                GpType::Frequency => "f",
                GpType::Orientation => "theta",
                GpType::Sigma => "sigma",
                _ => "o1",
            };
            out.push_str(&render_param(key, *value));
        }
        Node::Func { prim, children } => {
            let sig = reg.sig(*prim);
            out.push('(');
            out.push_str(sig.name);
            for (child, spec) in children.iter().zip(sig.children.iter()) {
                out.push(' ');
                match (child, spec.param_key) {
                    (Node::Param { value, .. }, Some(key)) => {
                        out.push_str(&render_param(key, *value))
                    }
                    _ => render_node_inner(child, reg, out),
                }
            }
            out.push(')');
        }
    }
}

/// Canonical rendering of a subtree.
pub fn render_node(node: &Node, reg: &Registry) -> String {
    let mut s = String::new();
    render_node_inner(node, reg, &mut s);
    s
}

pub fn render(tree: &GenotypeTree, reg: &Registry) -> String {
    render_node(&tree.root, reg)
}

#[derive(Debug)]
enum Token {
    LParen(usize),
    RParen(usize),
    Atom(usize, String),
}

impl Token {
    fn pos(&self) -> usize {
        match self {
            Token::LParen(p) | Token::RParen(p) | Token::Atom(p, _) => *p,
        }
    }
}

fn tokenize(s: &str) -> Result<Vec<Token>> {
    let mut tokens = Vec::new();
    let mut chars = s.char_indices().peekable();
    while let Some(&(pos, c)) = chars.peek() {
        match c {
            '(' => {
                tokens.push(Token::LParen(pos));
                chars.next();
            }
            ')' => {
                tokens.push(Token::RParen(pos));
                chars.next();
            }
            c if c.is_whitespace() => {
                chars.next();
            }
            _ => {
                let mut atom = String::new();
                while let Some(&(_, c)) = chars.peek() {
                    if c == '(' || c == ')' || c.is_whitespace() {
                        break;
                    }
                    atom.push(c);
                    chars.next();
                }
                tokens.push(Token::Atom(pos, atom));
            }
        }
    }
    Ok(tokens)
}

fn err(pos: usize, msg: impl Into<String>) -> EdlgpError {
    EdlgpError::Parse { pos, msg: msg.into() }
}

/// Untyped parse tree.
enum PNode {
    Call { pos: usize, name: String, args: Vec<PNode> },
    Atom { pos: usize, text: String },
}

fn parse_pnode(tokens: &[Token], at: &mut usize) -> Result<PNode> {
    match tokens.get(*at) {
        None => Err(err(usize::MAX, "unexpected end of input")),
        Some(Token::RParen(p)) => Err(err(*p, "unexpected ')'")),
        Some(Token::Atom(p, text)) => {
            *at += 1;
            Ok(PNode::Atom { pos: *p, text: text.clone() })
        }
        Some(Token::LParen(p)) => {
            *at += 1;
            let name = match tokens.get(*at) {
                Some(Token::Atom(_, name)) => name.clone(),
                Some(t) => return Err(err(t.pos(), "expected a function name after '('")),
                None => return Err(err(*p, "unclosed '('")),
            };
            *at += 1;
            let mut args = Vec::new();
            loop {
                match tokens.get(*at) {
                    Some(Token::RParen(_)) => {
                        *at += 1;
                        break;
                    }
                    Some(_) => args.push(parse_pnode(tokens, at)?),
                    None => return Err(err(*p, "unclosed '('")),
                }
            }
            Ok(PNode::Call { pos: *p, name, args })
        }
    }
}

fn bind_param(
    pos: usize,
    text: &str,
    expected: GpType,
    slot_key: &str,
    reg: &Registry,
) -> Result<Node> {
    let Some((key, value_s)) = text.split_once('=') else {
        return Err(err(pos, format!("expected {slot_key}=<value>, got `{text}`")));
    };
    if key != slot_key {
        return Err(err(pos, format!("expected parameter `{slot_key}` here, got `{key}`")));
    }
    let domain = reg.param_domain(expected);
    let value = match expected {
        GpType::TreeCount | GpType::TreeDepth | GpType::Order | GpType::Sigma => {
            let v: i64 = value_s
                .parse()
                .map_err(|_| err(pos, format!("`{value_s}` is not an integer")))?;
            ParamValue::Int(v)
        }
        GpType::Frequency | GpType::Orientation => {
            let v = parse_real(value_s)
                .ok_or_else(|| err(pos, format!("`{value_s}` is not a real value")))?;
            // Snap to the nearest domain value so hand-edited decimals
            // stay bit-identical to the grid.
            let snapped = domain
                .iter()
                .find(|d| (d.as_f64() - v).abs() <= 1e-9)
                .copied();
            match snapped {
                Some(d) => d,
                None => ParamValue::Real(v),
            }
        }
        _ => return Err(err(pos, format!("type {expected} takes no parameters"))),
    };
    if !domain.contains(&value) {
        return Err(err(pos, format!("{value_s} is outside the {expected} domain")));
    }
    Ok(Node::Param { ptype: expected, value })
}

fn bind(pnode: &PNode, expected: GpType, slot_key: Option<&str>, reg: &Registry) -> Result<Node> {
    match pnode {
        PNode::Atom { pos, text } => {
            if let Some(key) = slot_key {
                return bind_param(*pos, text, expected, key, reg);
            }
            match expected {
                GpType::Image => {
                    let c = Channel::from_name(text)
                        .ok_or_else(|| err(*pos, format!("unknown channel `{text}`")))?;
                    if !reg.channels().contains(&c) {
                        return Err(err(*pos, format!("channel `{text}` not available for this dataset")));
                    }
                    Ok(Node::Channel(c))
                }
                _ => Err(err(*pos, format!("expected a {expected} subtree, got `{text}`"))),
            }
        }
        PNode::Call { pos, name, args } => {
            let prim = reg
                .by_name(name)
                .ok_or_else(|| err(*pos, format!("unknown primitive `{name}`")))?;
            let sig = reg.sig(prim);
            if sig.return_type != expected {
                return Err(err(
                    *pos,
                    format!("`{name}` returns {}, expected {expected}", sig.return_type),
                ));
            }
            if args.len() != sig.children.len() {
                return Err(err(
                    *pos,
                    format!("`{name}` takes {} arguments, got {}", sig.children.len(), args.len()),
                ));
            }
            let children = args
                .iter()
                .zip(sig.children.iter())
                .map(|(a, spec)| bind(a, spec.gp_type, spec.param_key, reg))
                .collect::<Result<Vec<_>>>()?;
            Ok(Node::Func { prim, children })
        }
    }
}

/// Parse a genotype from its text form. The root must be a summation node.
pub fn parse(s: &str, reg: &Registry) -> Result<GenotypeTree> {
    let tokens = tokenize(s)?;
    if tokens.is_empty() {
        return Err(err(0, "empty input"));
    }
    let mut at = 0;
    let pnode = parse_pnode(&tokens, &mut at)?;
    if let Some(t) = tokens.get(at) {
        return Err(err(t.pos(), "trailing input after the tree"));
    }
    let root = bind(&pnode, GpType::Probs, None, reg)?;
    match &root {
        Node::Func { prim, .. } if reg.sig(*prim).layer == crate::types::Layer::Summation => {}
        _ => {
            return Err(err(
                match &pnode {
                    PNode::Call { pos, .. } | PNode::Atom { pos, .. } => *pos,
                },
                "root must be Sum2, Sum3 or Sum4",
            ))
        }
    }
    Ok(GenotypeTree::new(root))
}
